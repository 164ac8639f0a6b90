use serde::{Deserialize, Serialize};

use super::Message;

/// What a player receives at the start of a step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Incoming {
    /// First step: the player only knows its id, input and fresh randomness.
    Start,
    /// Synchronous round: `messages[j]` came from player `j`.
    Sync(Vec<Option<Message>>),
    /// Asynchronous step: a single message with its sender id.
    Async { sender: usize, message: Message },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewStep {
    /// Copies `m'` of what this player sent at the previous step.
    pub sent_copies: Vec<Option<Message>>,
    pub received: Incoming,
    pub randomness: u64,
}

/// Everything a non-erasing player has seen so far. Append-only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct View {
    pub player: usize,
    pub n: usize,
    pub input: u64,
    pub steps: Vec<ViewStep>,
}

impl View {
    pub fn new(player: usize, n: usize, input: u64) -> Self {
        Self { player, n, input, steps: Vec::new() }
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn push(&mut self, step: ViewStep) {
        self.steps.push(step);
    }

    /// Length of the canonical serialization; strictly grows with every step.
    pub fn serialized_len(&self) -> usize {
        serde_json::to_vec(self).map(|v| v.len()).unwrap_or(0)
    }
}
