use std::collections::HashMap;
use std::sync::Mutex;

use super::{AdversaryError, ByzantinePolicy};
use crate::normalform::QuantizedProtocol;
use crate::qstate::SparseState;
use crate::sched::{ExecutionTrace, SyncAdversary, SyncEngine};

/// Supplies the corrupted side's state when the classical run corrupts new
/// players.
pub trait Resimulator: Send + Sync {
    /// `prefix` is the classical trace up to the corruption, `transcript`
    /// the values of the good side's copies of all messages exchanged with
    /// corrupted players, and `bad` the registers to produce a state for.
    fn resimulate(
        &self,
        prefix: &ExecutionTrace,
        round: usize,
        transcript: &[(String, Vec<u16>)],
        bad: &[String],
    ) -> Result<SparseState, AdversaryError>;
}

type CacheKey = (ExecutionTrace, Vec<(String, Vec<u16>)>);

/// Classical private-channel adversary built from a quantum Byzantine
/// policy. It runs the same policy on its own registers; when it corrupts
/// new players it discards what it held and rebuilds the state the quantum
/// adversary would have, by replaying the quantum execution along the
/// observed trace and conditioning on the transcript.
pub struct ClassicalByzantine<'a> {
    policy: &'a dyn ByzantinePolicy,
    quantum: &'a QuantizedProtocol,
    inputs: Vec<u64>,
    t: usize,
    cache: Mutex<HashMap<CacheKey, SparseState>>,
}

impl<'a> ClassicalByzantine<'a> {
    pub fn new(policy: &'a dyn ByzantinePolicy, quantum: &'a QuantizedProtocol, inputs: Vec<u64>, t: usize) -> Self {
        Self { policy, quantum, inputs, t, cache: Mutex::new(HashMap::new()) }
    }

    /// The adversary to hand to a classical engine.
    pub fn adversary(&self) -> SyncAdversary<'_> {
        SyncAdversary::Byzantine { policy: self.policy, resimulator: Some(self) }
    }

    fn rebuild(
        &self,
        prefix: &ExecutionTrace,
        round: usize,
        transcript: &[(String, Vec<u16>)],
        bad: &[String],
    ) -> Result<SparseState, AdversaryError> {
        let engine = SyncEngine::new(self.quantum, self.inputs.clone())
            .with_adversary(self.t, SyncAdversary::Byzantine { policy: self.policy, resimulator: None });
        let halted = engine.replay(prefix, Some(round)).map_err(|_| AdversaryError::InconsistentPrefix)?;
        if halted.trace != *prefix {
            return Err(AdversaryError::InconsistentPrefix);
        }
        let mut names = Vec::new();
        let mut values = Vec::new();
        for (reg, v) in transcript {
            names.push(reg.clone());
            values.extend(v.iter().copied());
        }
        let conditioned = if names.is_empty() {
            halted.state
        } else {
            let sites = halted.state.layout().sites_of(&names)?;
            match halted.state.project(&sites, &values)? {
                (_, Some(s)) => s,
                (_, None) => return Err(AdversaryError::InconsistentPrefix),
            }
        };
        Ok(conditioned.factor(bad)?)
    }
}

impl Resimulator for ClassicalByzantine<'_> {
    fn resimulate(
        &self,
        prefix: &ExecutionTrace,
        round: usize,
        transcript: &[(String, Vec<u16>)],
        bad: &[String],
    ) -> Result<SparseState, AdversaryError> {
        let key = (prefix.clone(), transcript.to_vec());
        if let Some(s) = self.cache.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = self.rebuild(prefix, round, transcript, bad)?;
        self.cache.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }
}
