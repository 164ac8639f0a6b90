//! Full-information quantum adversaries, the private-channel classical
//! adversaries built from them, and the reduction checker.
//!
//! The two adversary kinds see different things, and the types enforce it:
//! a [`FailStopPolicy`] is handed the literal pure states of the system
//! ([`FullInfoContext`]); a [`PrivateFailStop`] only ever gets the classical
//! trace prefix ([`PrivateContext`]). Byzantine policies are functions of the
//! classical history alone; what differs between the quantum and the
//! classical run is the state their operations act on.

mod byzantine;
mod failstop;
mod transcript;
mod policies;
mod reduction;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use byzantine::{ClassicalByzantine, Resimulator};
pub use failstop::{build_classical_failstop, view_reconstruct, ClassicalFailStop};
pub use transcript::{bell_without_copy, transcript_product_check, transcript_suite, TranscriptReport, TranscriptSuiteReport};
pub use policies::{
    CrashSchedule, FlipAttack, HadamardAttack, HonestByzantine, MaxLeaderCrash, NoFailStop, ValueAdaptiveCrash,
};
pub use reduction::{check_failstop_reduction, check_byzantine_reduction, ReductionReport, TraceRow};

use crate::qstate::ClassicalDistribution;
use crate::qstate::SparseState;
use crate::sched::ExecutionTrace;

/// `(S_k, V_k)`: the corrupted set and which in-flight messages of newly
/// corrupted players still get delivered, as `(from, to)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailStopAction {
    pub corrupt: BTreeSet<usize>,
    pub deliver: BTreeSet<(usize, usize)>,
}

/// Everything a full-information Fail-stop adversary sees at the start of a
/// round: its randomness and the pure state after every completed round.
pub struct FullInfoContext<'a> {
    pub r_a: u64,
    pub round: usize,
    pub n: usize,
    pub t: usize,
    pub views: &'a [SparseState],
    pub corrupted: &'a BTreeSet<usize>,
    /// `(from, to)` of messages in flight.
    pub in_flight: &'a [(usize, usize)],
}

/// What a private-channel adversary sees: randomness, the classical trace
/// prefix and message patterns, never contents.
pub struct PrivateContext<'a> {
    pub r_a: u64,
    pub round: usize,
    pub n: usize,
    pub t: usize,
    pub trace: &'a ExecutionTrace,
    pub corrupted: &'a BTreeSet<usize>,
    pub in_flight: &'a [(usize, usize)],
}

/// `f_A` of a quantum full-information Fail-stop adversary.
pub trait FailStopPolicy: Send + Sync {
    fn name(&self) -> String;
    fn r_a_dist(&self) -> ClassicalDistribution {
        ClassicalDistribution::point(0)
    }
    fn act(&self, ctx: &FullInfoContext<'_>) -> FailStopAction;
}

/// A classical private-channel Fail-stop adversary.
pub trait PrivateFailStop: Send + Sync {
    fn r_a_dist(&self) -> ClassicalDistribution;
    fn act(&self, ctx: &PrivateContext<'_>) -> Result<FailStopAction, AdversaryError>;
}

/// A site inside a named register.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteRef {
    pub register: String,
    pub site: usize,
}

impl SiteRef {
    pub fn new(register: impl Into<String>, site: usize) -> Self {
        Self { register: register.into(), site }
    }
}

/// One adversary operation on corrupted registers.
#[derive(Debug, Clone, PartialEq)]
pub enum AdvOp {
    Dense { targets: Vec<SiteRef>, matrix: DMatrix<Complex64> },
    /// Adds constants to sites (generalised `X`).
    Shift { targets: Vec<SiteRef>, delta: Vec<u16> },
    /// `target += control`.
    Cx { control: SiteRef, target: SiteRef },
    /// Computational-basis measurement; outcomes are appended to `a_k`/`a'_k`.
    Measure { targets: Vec<SiteRef> },
    /// Fresh adversary workspace register in `|0>`.
    Alloc { name: String, dims: Vec<u16> },
}

/// A message a corrupted player hands to a good player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub from: usize,
    pub to: usize,
    pub register: String,
}

/// Classical history handed to a Byzantine policy: `r_A` and
/// `(a_j, a'_j, b_j, d_j)` so far.
pub struct ByzantineContext<'a> {
    pub r_a: u64,
    pub round: usize,
    pub n: usize,
    pub t: usize,
    pub trace: &'a ExecutionTrace,
    pub corrupted: &'a BTreeSet<usize>,
    /// `(from, to, register)` of messages in flight.
    pub in_flight: &'a [(usize, usize, String)],
}

/// `g_A` and `f_A` of a Byzantine adversary.
pub trait ByzantinePolicy: Send + Sync {
    fn name(&self) -> String;
    fn r_a_dist(&self) -> ClassicalDistribution {
        ClassicalDistribution::point(0)
    }
    /// `g_A`: operation `(U_k, M_k)` on the registers of `S_{k-1}`.
    fn pre_ops(&self, ctx: &ByzantineContext<'_>) -> Vec<AdvOp>;
    /// `f_A`: the enlarged set `S_k` and `(U'_k, M'_k)`.
    fn corrupt(&self, ctx: &ByzantineContext<'_>, a: &[u16]) -> (BTreeSet<usize>, Vec<AdvOp>);
    /// Messages from corrupted to good players this round.
    fn deliveries(&self, ctx: &ByzantineContext<'_>, a: &[u16], a_prime: &[u16]) -> Vec<Delivery>;
}

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error("corruption set of size {size} exceeds budget {t}")]
    Budget { size: usize, t: usize },
    #[error("corruption must be monotone; player {0} was released")]
    NotMonotone(usize),
    #[error("delivery choice ({0}, {1}) is not an in-flight message of a newly corrupted player")]
    BadDelivery(usize, usize),
    #[error("operation touches register `{0}` that the adversary does not hold")]
    NotCorrupted(String),
    #[error("trace prefix has zero probability")]
    InconsistentPrefix,
    #[error(transparent)]
    State(#[from] crate::qstate::StateError),
    #[error(transparent)]
    Sched(#[from] Box<crate::sched::SchedError>),
}

/// Checks monotonicity and budget of a new corruption set.
pub fn check_corruption(prev: &BTreeSet<usize>, next: &BTreeSet<usize>, t: usize) -> Result<(), AdversaryError> {
    if let Some(&p) = prev.difference(next).next() {
        return Err(AdversaryError::NotMonotone(p));
    }
    if next.len() > t {
        return Err(AdversaryError::Budget { size: next.len(), t });
    }
    Ok(())
}
