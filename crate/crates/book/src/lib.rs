//! Guide listings are compiled as doc-tests here, one module per chapter so
//! a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/state-engine.md")]
pub mod state_engine {}
#[doc = include_str!("../../../book/src/coin.md")]
pub mod coin {}
#[doc = include_str!("../../../book/src/reductions.md")]
pub mod reductions {}
#[doc = include_str!("../../../book/src/savss.md")]
pub mod savss {}
#[doc = include_str!("../../../book/src/agreement.md")]
pub mod agreement {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
