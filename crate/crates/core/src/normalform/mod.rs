//! Round/step normal form for classical protocols, the non-erasing wrapper,
//! and the quantizer.
//!
//! A protocol in normal form is a total, deterministic step function `f_P`
//! from a player's [`View`] to its outgoing messages, message pattern and
//! decision, together with the distribution of the fresh randomness drawn at
//! each step. Protocols are usually written as erasing state machines
//! ([`LocalProtocol`]) and turned into normal form with [`wrap_non_erasing`].

mod classical;
mod quantize;
mod view;

use std::sync::Arc;

pub use classical::ClassicalPlayer;
pub use quantize::{
    copy_register, decision_register, message_register, pattern_register, quantize, randomness_register, PlayerRegs,
    QuantizedProtocol, QuantumStepBranch, RandSrc, ReceivedRegs, StepRegs,
};
pub use view::{Incoming, View, ViewStep};

use serde::{Deserialize, Serialize};

use crate::qstate::{ClassicalDistribution, StateError};

/// Message content, one value per message site.
pub type Message = Vec<u16>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Timing {
    Sync,
    Async,
}

/// Per-site dimensions of every message a protocol sends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageAlphabet {
    pub dims: Vec<u16>,
}

impl MessageAlphabet {
    pub fn new(dims: Vec<u16>) -> Self {
        assert!(!dims.is_empty() && dims.iter().all(|&d| d >= 2));
        Self { dims }
    }

    pub fn sites(&self) -> usize {
        self.dims.len()
    }

    pub fn check(&self, m: &[u16]) -> Result<(), NormalFormError> {
        if m.len() != self.dims.len() || m.iter().zip(&self.dims).any(|(&v, &d)| v >= d) {
            return Err(NormalFormError::Malformed(m.to_vec()));
        }
        Ok(())
    }
}

/// Output of `f_P` for one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutput {
    /// `messages[j]` is sent to player `j` when present (`b = 1`).
    pub messages: Vec<Option<Message>>,
    pub decision: Option<bool>,
}

impl StepOutput {
    pub fn silent(n: usize) -> Self {
        Self { messages: vec![None; n], decision: None }
    }

    pub fn multicast(n: usize, m: Message) -> Self {
        Self { messages: vec![Some(m); n], decision: None }
    }

    pub fn decide(n: usize, d: bool) -> Self {
        Self { messages: vec![None; n], decision: Some(d) }
    }

    /// Message pattern `b`.
    pub fn pattern(&self) -> Vec<u8> {
        self.messages.iter().map(|m| u8::from(m.is_some())).collect()
    }
}

/// Encoding of decisions in the `D` qutrit: 0 and 1 decide, 2 is undecided.
pub const UNDECIDED_CODE: u16 = 2;

pub fn decision_code(d: Option<bool>) -> u16 {
    match d {
        Some(b) => b as u16,
        None => UNDECIDED_CODE,
    }
}

pub fn decode_decision(code: u16) -> Option<bool> {
    match code {
        0 => Some(false),
        1 => Some(true),
        _ => None,
    }
}

/// A classical protocol in normal form.
pub trait NormalForm: Send + Sync {
    fn name(&self) -> String;
    fn n(&self) -> usize;
    fn timing(&self) -> Timing;
    fn alphabet(&self) -> &MessageAlphabet;
    /// Per-site dimensions of the randomness register.
    fn randomness_dims(&self) -> Vec<u16>;
    /// Distribution of `r_k` for `player` at its `step`-th step (1-based).
    fn randomness(&self, player: usize, step: usize) -> ClassicalDistribution;
    /// `f_P`. Must be total and deterministic.
    fn step(&self, view: &View) -> StepOutput;
    /// Safety bound on steps per player for runners.
    fn max_steps(&self) -> usize;
}

pub type ClassicalProtocol = Arc<dyn NormalForm>;

/// An erasing state-machine description of a protocol.
pub trait LocalProtocol: Send + Sync + 'static {
    type State: Clone + Send + Sync;

    fn name(&self) -> String;
    fn n(&self) -> usize;
    fn timing(&self) -> Timing;
    fn alphabet(&self) -> &MessageAlphabet;
    fn randomness_dims(&self) -> Vec<u16>;
    fn randomness(&self, player: usize, step: usize) -> ClassicalDistribution;
    fn max_steps(&self) -> usize;

    fn start(&self, player: usize, input: u64, r: u64) -> (Self::State, StepOutput);
    fn receive(&self, player: usize, state: &Self::State, incoming: &Incoming, r: u64) -> (Self::State, StepOutput);
}

/// Normal form of a [`LocalProtocol`] whose players keep every prior View.
///
/// `f_P` replays the state machine over the whole retained View, so the
/// outputs at every step are exactly those of the wrapped protocol.
pub struct NonErasing<P: LocalProtocol> {
    inner: P,
}

pub fn wrap_non_erasing<P: LocalProtocol>(protocol: P) -> Arc<NonErasing<P>> {
    Arc::new(NonErasing { inner: protocol })
}

impl<P: LocalProtocol> NonErasing<P> {
    pub fn inner(&self) -> &P {
        &self.inner
    }

    /// State of the wrapped machine after every step of `view`.
    pub fn replay(&self, view: &View) -> Vec<(P::State, StepOutput)> {
        let mut out: Vec<(P::State, StepOutput)> = Vec::with_capacity(view.steps.len());
        for (k, s) in view.steps.iter().enumerate() {
            let next = if k == 0 {
                self.inner.start(view.player, view.input, s.randomness)
            } else {
                self.inner.receive(view.player, &out[k - 1].0, &s.received, s.randomness)
            };
            out.push(next);
        }
        out
    }
}

impl<P: LocalProtocol> NormalForm for NonErasing<P> {
    fn name(&self) -> String {
        self.inner.name()
    }
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn timing(&self) -> Timing {
        self.inner.timing()
    }
    fn alphabet(&self) -> &MessageAlphabet {
        self.inner.alphabet()
    }
    fn randomness_dims(&self) -> Vec<u16> {
        self.inner.randomness_dims()
    }
    fn randomness(&self, player: usize, step: usize) -> ClassicalDistribution {
        self.inner.randomness(player, step)
    }
    fn step(&self, view: &View) -> StepOutput {
        self.replay(view).pop().map(|(_, o)| o).unwrap_or_else(|| StepOutput::silent(self.n()))
    }
    fn max_steps(&self) -> usize {
        self.inner.max_steps()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("player {0} has already terminated")]
    Terminated(usize),
    #[error("malformed message {0:?}")]
    Malformed(Message),
    #[error(transparent)]
    State(#[from] StateError),
}
