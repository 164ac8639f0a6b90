//! Protocols shipped with the crate.

pub mod ba;
pub mod bracha;
pub mod coin;
pub mod field;
pub mod get_core_check;
pub mod leader_coin;
pub mod quantum_coin;
pub mod savss;

pub use ba::{ba_trials, BaReport, BaRun, CommonCoin, PhaseVoting};
pub use bracha::{Bracha, BrachaOutcome, SenderBehavior};
pub use coin::{classical_common_coin, ClassicalCoin, CoinState};
pub use field::PrimeField;
pub use get_core_check::{check_core_property, CoreCheckReport};
pub use leader_coin::{leader_coin, LeaderCoin};
pub use quantum_coin::{core_set_game, quantum_multicast, CoreSetGame, QuantumCoin};
pub use savss::{
    savss_privacy_audit, savss_reconstruct, savss_share, secret_distribution, DealerBehavior, RecBranch, SavssError,
    SavssParams, ShareBranch, ShareResult, SymmetricBivariate,
};
