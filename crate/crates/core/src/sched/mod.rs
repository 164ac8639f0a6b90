//! Execution engines and exact branch enumeration.
//!
//! The synchronous engine runs rounds, the asynchronous engine runs steps in
//! which one player receives one message. Both produce an
//! [`ExecutionTrace`] of classical events. In enumeration mode every
//! measurement and every value of the adversary's randomness forks the run,
//! so the result is the exact [`TraceDistribution`].

mod asynchronous;
mod sync;
mod trace;

pub use asynchronous::{AsyncBranch, AsyncEngine, AsyncResult, Fifo, PendingInfo, Scheduler, SchedulerChoice};
pub use sync::{LoggedMessage, RunResult, SyncAdversary, SyncEngine, Terminal};
pub use trace::{trace_line, Event, ExecutionTrace, RoundTuple, TraceDistribution};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Default cap on the number of branches an enumeration may create.
pub const DEFAULT_BRANCH_BUDGET: usize = 1_000_000;

/// How forks are resolved.
#[derive(Debug, Clone)]
pub enum RunMode {
    /// Follow every branch; drop branches below `cutoff` and count their mass.
    Enumerate { cutoff: f64, budget: usize },
    /// Follow one branch chosen with a seeded generator.
    Sample { seed: u64 },
    /// Follow the branch matching `target`; stop once it is exhausted (or
    /// right after the corruption step of `halt_after_corruption`).
    Replay { target: ExecutionTrace, halt_after_corruption: Option<usize> },
}

impl RunMode {
    pub fn exact() -> Self {
        RunMode::Enumerate { cutoff: 0.0, budget: DEFAULT_BRANCH_BUDGET }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchedError {
    #[error("branch budget exceeded after {0} branches")]
    BudgetExceeded(usize),
    #[error("{0} players but {1} inputs")]
    InputCount(usize, usize),
    #[error("schedule is not admissible: {0}")]
    Inadmissible(String),
    #[error("replay target has zero probability")]
    ReplayMismatch,
    #[error(transparent)]
    Protocol(#[from] crate::normalform::NormalFormError),
    #[error(transparent)]
    State(#[from] crate::qstate::StateError),
    #[error(transparent)]
    Adversary(#[from] crate::adversary::AdversaryError),
}

/// Shared fork resolution.
pub(crate) struct Forker {
    pub mode: RunMode,
    pub rng: Option<ChaCha8Rng>,
    pub created: usize,
    pub pruned: f64,
}

impl Forker {
    pub fn new(mode: RunMode) -> Self {
        let rng = match &mode {
            RunMode::Sample { seed } => Some(<ChaCha8Rng as rand::SeedableRng>::seed_from_u64(*seed)),
            _ => None,
        };
        Self { mode, rng, created: 0, pruned: 0.0 }
    }

    /// Resolves siblings produced by one fork. `weight` reads a branch's
    /// conditional probability, `trace` its trace so far.
    pub fn select<W>(
        &mut self,
        mut siblings: Vec<W>,
        weight: impl Fn(&W) -> f64,
        abs_prob: impl Fn(&W) -> f64,
        trace: impl Fn(&W) -> &ExecutionTrace,
    ) -> Result<Vec<W>, SchedError> {
        match &self.mode {
            RunMode::Enumerate { cutoff, budget } => {
                let cutoff = *cutoff;
                let mut kept = Vec::with_capacity(siblings.len());
                for w in siblings {
                    if abs_prob(&w) < cutoff {
                        self.pruned += abs_prob(&w);
                    } else {
                        kept.push(w);
                    }
                }
                self.created += kept.len();
                if self.created > *budget {
                    return Err(SchedError::BudgetExceeded(self.created));
                }
                Ok(kept)
            }
            RunMode::Sample { .. } => {
                if siblings.len() <= 1 {
                    return Ok(siblings);
                }
                let total: f64 = siblings.iter().map(&weight).sum();
                let u: f64 = self.rng.as_mut().unwrap().gen::<f64>() * total;
                let mut acc = 0.0;
                let last = siblings.len() - 1;
                let idx = siblings
                    .iter()
                    .enumerate()
                    .find(|(i, w)| {
                        acc += weight(w);
                        u < acc || *i == last
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(last);
                Ok(vec![siblings.swap_remove(idx)])
            }
            RunMode::Replay { target, .. } => {
                siblings.retain(|w| {
                    let t = trace(w);
                    t.is_prefix_of(target) || target.is_prefix_of(t)
                });
                // Keep only the branch consistent with the target; silent forks
                // resolve to the first consistent sibling.
                siblings.truncate(1);
                Ok(siblings)
            }
        }
    }
}
