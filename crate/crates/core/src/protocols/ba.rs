//! Phase-voting binary agreement for crash faults, driven by a common coin.
//!
//! Each phase has two exchanges. In the first, players send their
//! preference and vote for `v` if more than `n/2` of all players reported
//! `v`; otherwise they vote blank. In the second, a player that sees `t + 1`
//! votes for `v` decides `v`, one that sees any vote for `v` adopts it, and
//! everybody else takes the common coin. At most one value can be voted for
//! in a phase, so a coin that lands on it for every player ends the run.
//!
//! Players wait for `n - t` messages per exchange. Which ones arrive, and
//! when a faulty player crashes, is drawn from the trial's seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::quantum_coin::QuantumCoin;
use crate::sched::{Event, Fifo, RunMode};

/// Source of one common-coin toss per phase.
pub trait CommonCoin: Sync {
    /// Output of each player (`None` for players without one) given the
    /// players already crashed.
    fn toss(&self, crashed: &BTreeSet<usize>, seed: u64) -> Vec<Option<bool>>;
}

impl CommonCoin for QuantumCoin {
    fn toss(&self, crashed: &BTreeSet<usize>, seed: u64) -> Vec<Option<bool>> {
        let mut out = vec![None; self.n];
        let Ok(r) = self.run(crashed, &Fifo, RunMode::Sample { seed }) else {
            return out;
        };
        if let Some(b) = r.branches.first() {
            for e in &b.trace.events {
                if let Event::Decision { player, d: Some(d) } = e {
                    out[*player] = Some(*d);
                }
            }
        }
        out
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaRun {
    pub inputs: Vec<bool>,
    pub crashed: BTreeSet<usize>,
    /// Decision of every player that did not crash.
    pub decisions: Vec<Option<bool>>,
    /// Phases until every live player decided.
    pub phases: usize,
}

impl BaRun {
    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.inputs.len()).filter(|i| !self.crashed.contains(i))
    }

    pub fn terminated(&self) -> bool {
        self.live().all(|i| self.decisions[i].is_some())
    }

    pub fn agreement(&self) -> bool {
        self.live().filter_map(|i| self.decisions[i]).collect::<BTreeSet<_>>().len() <= 1
    }

    /// Unanimous inputs force that decision.
    pub fn validity(&self) -> bool {
        let first = self.inputs[0];
        !self.inputs.iter().all(|&x| x == first) || self.live().all(|i| self.decisions[i] != Some(!first))
    }
}

/// Crash-fault agreement among `n` players tolerating `t < n/2` crashes.
#[derive(Debug, Clone, Copy)]
pub struct PhaseVoting {
    pub n: usize,
    pub t: usize,
    /// Runs still undecided after this many phases count as stuck.
    pub max_phases: usize,
    /// Chance that a faulty player crashes in a given exchange.
    pub crash_rate: f64,
}

impl PhaseVoting {
    pub fn new(n: usize, t: usize) -> Self {
        assert!(2 * t < n, "crash-fault voting needs t < n/2");
        Self { n, t, max_phases: 200, crash_rate: 0.25 }
    }

    /// One run. The first `t` players are faulty and crash at random.
    pub fn run(&self, inputs: &[bool], coin: &dyn CommonCoin, seed: u64) -> BaRun {
        let (n, t) = (self.n, self.t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut crashed = BTreeSet::new();
        let mut pref: Vec<bool> = inputs.to_vec();
        let mut decisions: Vec<Option<bool>> = vec![None; n];
        let mut phases = 0;
        while phases < self.max_phases {
            let live: Vec<usize> = (0..n).filter(|i| !crashed.contains(i)).collect();
            if live.iter().all(|&i| decisions[i].is_some()) {
                break;
            }
            phases += 1;
            let reports = self.exchange(&mut rng, &mut crashed, |i| Some(pref[i]));
            let votes: Vec<Option<bool>> = reports
                .iter()
                .map(|got| [false, true].into_iter().find(|&v| 2 * got.iter().filter(|x| **x == Some(v)).count() > n))
                .collect();
            let seen = self.exchange(&mut rng, &mut crashed, |i| votes[i]);
            let toss = coin.toss(&crashed, rng.gen());
            for i in (0..n).filter(|i| !crashed.contains(i)) {
                let count = |v: bool| seen[i].iter().filter(|x| **x == Some(v)).count();
                match [false, true].into_iter().find(|&v| count(v) > 0) {
                    Some(v) => {
                        pref[i] = v;
                        if count(v) > t && decisions[i].is_none() {
                            decisions[i] = Some(v);
                        }
                    }
                    None => pref[i] = toss[i].unwrap_or(false),
                }
            }
        }
        for &i in &crashed {
            decisions[i] = None;
        }
        BaRun { inputs: inputs.to_vec(), crashed, decisions, phases }
    }

    /// Every live player sends `msg(i)` to all. Faulty players may crash
    /// now, reaching only a random subset. Each live receiver gets `n - t`
    /// of the messages sent to it; `None` marks a blank message, a missing
    /// one is simply absent.
    fn exchange(
        &self,
        rng: &mut ChaCha8Rng,
        crashed: &mut BTreeSet<usize>,
        msg: impl Fn(usize) -> Option<bool>,
    ) -> Vec<Vec<Option<bool>>> {
        let (n, t) = (self.n, self.t);
        let mut reach = vec![vec![false; n]; n];
        for from in 0..n {
            if crashed.contains(&from) {
                continue;
            }
            let crashing = from < t && rng.gen_bool(self.crash_rate);
            for row in reach.iter_mut() {
                row[from] = !crashing || rng.gen_bool(0.5);
            }
            if crashing {
                crashed.insert(from);
            }
        }
        (0..n)
            .map(|to| {
                let mut senders: Vec<usize> = (0..n).filter(|&f| reach[to][f]).collect();
                senders.shuffle(rng);
                // Live senders are always at least n - t, so waiting ends.
                senders.truncate(n - t);
                senders.into_iter().map(&msg).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaReport {
    pub n: usize,
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    pub agreement_violations: usize,
    pub validity_violations: usize,
    pub unterminated: usize,
    pub mean_phases: f64,
    pub max_phases: usize,
}

impl BaReport {
    pub fn passed(&self) -> bool {
        self.agreement_violations == 0 && self.validity_violations == 0 && self.unterminated == 0
    }
}

/// `trials` runs with random inputs, trial `k` seeded by `seed + k`.
pub fn ba_trials(n: usize, t: usize, trials: usize, seed: u64, coin: &dyn CommonCoin) -> BaReport {
    let ba = PhaseVoting::new(n, t);
    let runs: Vec<BaRun> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let inputs: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            ba.run(&inputs, coin, rng.gen())
        })
        .collect();
    BaReport {
        n,
        t,
        trials,
        seed,
        agreement_violations: runs.iter().filter(|r| !r.agreement()).count(),
        validity_violations: runs.iter().filter(|r| !r.validity()).count(),
        unterminated: runs.iter().filter(|r| !r.terminated()).count(),
        mean_phases: runs.iter().map(|r| r.phases as f64).sum::<f64>() / trials.max(1) as f64,
        max_phases: runs.iter().map(|r| r.phases).max().unwrap_or(0),
    }
}
