//! Sparse computational-basis state engine.
//!
//! A [`SparseState`] is a pure state over a [`RegisterLayout`] of named qudit
//! registers. Amplitudes are stored only for basis configurations in the
//! support, which stays small for honest dynamics (purify, permute, measure)
//! because those never grow the support beyond the product of the
//! randomness supports.

mod analysis;
mod dense;
mod dist;
mod layout;
mod measure;
mod perm;
mod props;
mod state;

pub use analysis::{schmidt_rank, SCHMIDT_TOLERANCE};
pub use dense::{gates, DenseUnitary, DEFAULT_DENSE_CAP};
pub use dist::ClassicalDistribution;
pub use layout::{BasisConfig, Register, RegisterLayout};
pub use measure::Branch;
pub use perm::{FunctionAdd, SitePermutation, SiteRelabel, PERMUTATION_CHECK_LIMIT};
pub use props::{
    commutation_suite, configurations, project_onto, random_relabel, random_sites, random_state, CommutationReport,
};
pub use state::{SparseState, NORM_TOLERANCE, PRUNE_THRESHOLD};

pub use num_complex::Complex64;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StateError {
    #[error("register `{0}` already exists")]
    DuplicateRegister(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("register must have at least one site and dimension >= 2 (got sites={sites}, dim={dim})")]
    BadRegisterShape { sites: usize, dim: u16 },
    #[error("site {0} is out of range")]
    SiteOutOfRange(usize),
    #[error("register `{0}` is not in the all-zero state")]
    RegisterNotZero(String),
    #[error("value {value} does not fit in register `{register}` (capacity {capacity})")]
    ValueTooLarge { register: String, value: u64, capacity: u64 },
    #[error("permutation is not injective on the support")]
    NotInjective,
    #[error("dense target of {dim} dimensions exceeds the cap of {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix dimension {got} does not match target dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    BadDistribution(String),
    #[error("measurement needs at least one site")]
    EmptySites,
    #[error("value {value} outside dimension {dim} at site {site}")]
    ValueOutOfRange { site: usize, value: u16, dim: u16 },
    #[error("state is not a product across the requested cut")]
    NotProduct,
    #[error("state has zero norm")]
    ZeroNorm,
}

pub type Result<T, E = StateError> = std::result::Result<T, E>;
