//! Classical common coin over the three-phase get-core exchange.
//!
//! Player `i` tosses `c_i` with `Pr[0] = 1/n`, runs get-core on it and
//! outputs the AND of the coins it ended up with (unknown slots count as 1).

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::normalform::{
    wrap_non_erasing, Incoming, LocalProtocol, Message, MessageAlphabet, NonErasing, StepOutput, Timing,
};
use crate::qstate::ClassicalDistribution;

/// Slot value for "not yet known".
pub const UNSET: u16 = 2;

pub const FIRST: u16 = 0;
pub const SECOND: u16 = 1;
pub const THIRD: u16 = 2;

/// Per-player get-core state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoinState {
    pub coins: Vec<u16>,
    pub s1: BTreeSet<usize>,
    pub s2: BTreeSet<usize>,
    pub s3: BTreeSet<usize>,
    pub output: Option<bool>,
}

impl CoinState {
    pub fn new(n: usize) -> Self {
        Self {
            coins: vec![UNSET; n],
            s1: BTreeSet::new(),
            s2: BTreeSet::new(),
            s3: BTreeSet::new(),
            output: None,
        }
    }
}

/// What a get-core step wants to do besides updating the state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GetCoreAction {
    Nothing,
    Multicast(u16),
    Return,
}

/// One get-core transition on receipt of `(tag, values)` from `from`.
/// Shared by the classical coin, the quantum coin and the model checker.
pub fn get_core_receive(
    st: &mut CoinState,
    n: usize,
    t: usize,
    from: usize,
    tag: u16,
    values: &[u16],
) -> GetCoreAction {
    let fill = |coins: &mut Vec<u16>| {
        for j in 0..n {
            if coins[j] == UNSET && values[j] != UNSET {
                coins[j] = values[j];
            }
        }
    };
    match tag {
        FIRST => {
            st.coins[from] = values[from];
            st.s1.insert(from);
            if st.s1.len() == n - t {
                return GetCoreAction::Multicast(SECOND);
            }
        }
        SECOND => {
            st.s2.insert(from);
            fill(&mut st.coins);
            if st.s2.len() == n - t {
                return GetCoreAction::Multicast(THIRD);
            }
        }
        _ => {
            st.s3.insert(from);
            fill(&mut st.coins);
            if st.s3.len() == n - t {
                return GetCoreAction::Return;
            }
        }
    }
    GetCoreAction::Nothing
}

#[derive(Debug, Clone)]
pub struct ClassicalCoin {
    n: usize,
    t: usize,
    bias: ClassicalDistribution,
    alphabet: MessageAlphabet,
}

impl ClassicalCoin {
    /// Coin with the standard bias `Pr[0] = 1/n`.
    pub fn new(n: usize, t: usize) -> Self {
        let bias = ClassicalDistribution::bernoulli_zero(1.0 / n as f64).expect("valid bias");
        Self::with_bias(n, t, bias)
    }

    /// Coin whose tosses follow `bias` (values 0 and 1).
    pub fn with_bias(n: usize, t: usize, bias: ClassicalDistribution) -> Self {
        let mut dims = vec![3];
        dims.extend(std::iter::repeat_n(3, n));
        Self { n, t, bias, alphabet: MessageAlphabet::new(dims) }
    }

    fn message(tag: u16, coins: &[u16]) -> Message {
        let mut m = vec![tag];
        m.extend_from_slice(coins);
        m
    }

    fn first(&self, player: usize, c: u16) -> Message {
        let mut slots = vec![UNSET; self.n];
        slots[player] = c;
        Self::message(FIRST, &slots)
    }
}

pub fn classical_common_coin(n: usize, t: usize) -> Arc<NonErasing<ClassicalCoin>> {
    wrap_non_erasing(ClassicalCoin::new(n, t))
}

/// Output rule: AND of all slots, unknown slots read as 1.
pub fn and_of_slots(coins: &[u16]) -> bool {
    coins.iter().all(|&c| c != 0)
}

impl LocalProtocol for ClassicalCoin {
    type State = CoinState;

    fn name(&self) -> String {
        format!("classical-coin(n={}, t={})", self.n, self.t)
    }
    fn n(&self) -> usize {
        self.n
    }
    fn timing(&self) -> Timing {
        Timing::Async
    }
    fn alphabet(&self) -> &MessageAlphabet {
        &self.alphabet
    }
    fn randomness_dims(&self) -> Vec<u16> {
        vec![2]
    }
    fn randomness(&self, _player: usize, step: usize) -> ClassicalDistribution {
        if step == 1 {
            self.bias.clone()
        } else {
            ClassicalDistribution::point(0)
        }
    }
    fn max_steps(&self) -> usize {
        3 * self.n + 1
    }

    fn start(&self, player: usize, _input: u64, r: u64) -> (CoinState, StepOutput) {
        let mut st = CoinState::new(self.n);
        st.coins[player] = r as u16;
        let out = StepOutput::multicast(self.n, self.first(player, r as u16));
        (st, out)
    }

    fn receive(&self, _player: usize, state: &CoinState, incoming: &Incoming, _r: u64) -> (CoinState, StepOutput) {
        let mut st = state.clone();
        let Incoming::Async { sender, message } = incoming else {
            return (st, StepOutput::silent(self.n));
        };
        if st.output.is_some() {
            return (st, StepOutput::silent(self.n));
        }
        let out = match get_core_receive(&mut st, self.n, self.t, *sender, message[0], &message[1..]) {
            GetCoreAction::Nothing => StepOutput::silent(self.n),
            GetCoreAction::Multicast(tag) => StepOutput::multicast(self.n, Self::message(tag, &st.coins)),
            GetCoreAction::Return => {
                for c in st.coins.iter_mut() {
                    if *c == UNSET {
                        *c = 1;
                    }
                }
                let d = and_of_slots(&st.coins);
                st.output = Some(d);
                StepOutput::decide(self.n, d)
            }
        };
        (st, out)
    }
}
