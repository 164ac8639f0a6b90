//! Two-round leader coin.
//!
//! Every player draws a coin bit `c` and a leader value `l`, multicasts both,
//! and after one round outputs the coin of the player with the largest
//! leader value (lowest id on ties). A full-information adversary that sees
//! the leader values crashes the winner before its messages arrive; in the
//! quantum execution it cannot.

use std::sync::Arc;

use crate::normalform::{
    wrap_non_erasing, Incoming, LocalProtocol, MessageAlphabet, NonErasing, StepOutput, Timing,
};
use crate::qstate::ClassicalDistribution;

#[derive(Debug, Clone)]
pub struct LeaderCoin {
    n: usize,
    leaders: u16,
    alphabet: MessageAlphabet,
}

impl LeaderCoin {
    /// `leaders` is the size of the leader-value range.
    pub fn new(n: usize, leaders: u16) -> Self {
        Self { n, leaders, alphabet: MessageAlphabet::new(vec![2, leaders]) }
    }

    /// `(c, l)` from the randomness value.
    pub fn split(&self, r: u64) -> (u16, u16) {
        ((r / self.leaders as u64) as u16, (r % self.leaders as u64) as u16)
    }
}

pub fn leader_coin(n: usize, leaders: u16) -> Arc<NonErasing<LeaderCoin>> {
    wrap_non_erasing(LeaderCoin::new(n, leaders))
}

impl LocalProtocol for LeaderCoin {
    /// Own `(c, l)`.
    type State = (u16, u16);

    fn name(&self) -> String {
        format!("leader-coin(n={}, L={})", self.n, self.leaders)
    }
    fn n(&self) -> usize {
        self.n
    }
    fn timing(&self) -> Timing {
        Timing::Sync
    }
    fn alphabet(&self) -> &MessageAlphabet {
        &self.alphabet
    }
    fn randomness_dims(&self) -> Vec<u16> {
        vec![2, self.leaders]
    }
    fn randomness(&self, _player: usize, step: usize) -> ClassicalDistribution {
        if step == 1 {
            ClassicalDistribution::uniform(2 * self.leaders as u64)
        } else {
            ClassicalDistribution::point(0)
        }
    }
    fn max_steps(&self) -> usize {
        2
    }

    fn start(&self, player: usize, _input: u64, r: u64) -> (Self::State, StepOutput) {
        let (c, l) = self.split(r);
        let mut out = StepOutput::multicast(self.n, vec![c, l]);
        out.messages[player] = None;
        ((c, l), out)
    }

    fn receive(&self, player: usize, state: &Self::State, incoming: &Incoming, _r: u64) -> (Self::State, StepOutput) {
        let mut best = (state.1, player, state.0);
        if let Incoming::Sync(msgs) = incoming {
            for (j, m) in msgs.iter().enumerate() {
                if let Some(m) = m {
                    let cand = (m[1], j, m[0]);
                    if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
            }
        }
        (*state, StepOutput::decide(self.n, best.2 == 1))
    }
}
