use rand::Rng;

use super::{ClassicalProtocol, Incoming, Message, NormalFormError, View, ViewStep};

/// A player of a classical protocol run step by step.
pub struct ClassicalPlayer {
    protocol: ClassicalProtocol,
    view: View,
    last_sent: Vec<Option<Message>>,
    decision: Option<bool>,
}

/// Result of one classical step: outgoing messages, pattern `b`, decision `d`.
pub type RoundOutcome = (Vec<Option<Message>>, Vec<u8>, Option<bool>);

impl ClassicalPlayer {
    pub fn new(protocol: ClassicalProtocol, player: usize, input: u64) -> Self {
        let n = protocol.n();
        Self { protocol, view: View::new(player, n, input), last_sent: vec![None; n], decision: None }
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn decision(&self) -> Option<bool> {
        self.decision
    }

    pub fn is_terminated(&self) -> bool {
        self.decision.is_some()
    }

    /// Samples `r_k`, appends to the View, evaluates `f_P`. A decided player
    /// terminates and sends nothing.
    pub fn run_round<R: Rng + ?Sized>(&mut self, incoming: Incoming, rng: &mut R) -> Result<RoundOutcome, NormalFormError> {
        if self.is_terminated() {
            return Err(NormalFormError::Terminated(self.view.player));
        }
        let alphabet = self.protocol.alphabet();
        match &incoming {
            Incoming::Start => {}
            Incoming::Sync(ms) => {
                for m in ms.iter().flatten() {
                    alphabet.check(m)?;
                }
            }
            Incoming::Async { message, .. } => alphabet.check(message)?,
        }
        let k = self.view.step_count() + 1;
        let r = self.protocol.randomness(self.view.player, k).sample_with(rng.gen());
        let copies = std::mem::replace(&mut self.last_sent, vec![None; self.view.n]);
        self.view.push(ViewStep { sent_copies: copies, received: incoming, randomness: r });
        let out = self.protocol.step(&self.view);
        if out.decision.is_some() {
            self.decision = out.decision;
            let n = self.view.n;
            return Ok((vec![None; n], vec![0; n], out.decision));
        }
        self.last_sent = out.messages.clone();
        let pattern = out.pattern();
        Ok((out.messages, pattern, None))
    }
}
