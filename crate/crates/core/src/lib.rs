//! A desk-scale laboratory for Byzantine agreement against full-information
//! quantum adversaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`qstate`] is a sparse computational-basis state engine with exactly the
//!   operations the protocols need: purified randomness, permutation
//!   unitaries, small dense unitaries, projectors and measurements.
//! * [`normalform`] describes classical protocols in round/step normal form
//!   and compiles them into quantum protocols.
//! * [`sched`] runs protocols synchronously or asynchronously, records
//!   execution traces and enumerates every branch exactly.
//! * [`adversary`] holds full-information quantum adversaries, the
//!   private-channel classical adversaries built from them, and the checker
//!   that compares both execution distributions.
//! * [`protocols`] has the concrete protocols: common coins, get-core,
//!   Bracha broadcast, SAVSS over prime fields and a phase-voting BA.

pub mod adversary;
pub mod normalform;
pub mod protocols;
pub mod qstate;
pub mod scenarios;
pub mod sched;
