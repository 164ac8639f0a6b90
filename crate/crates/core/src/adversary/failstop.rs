use std::collections::HashMap;
use std::sync::Mutex;

use super::{AdversaryError, FailStopAction, FailStopPolicy, FullInfoContext, PrivateContext, PrivateFailStop};
use crate::normalform::QuantizedProtocol;
use crate::qstate::{ClassicalDistribution, SparseState};
use crate::sched::{ExecutionTrace, SyncAdversary, SyncEngine, Terminal};

/// Rebuilds the pure global state after every completed round of the
/// quantum execution `(protocol, policy)` that produced the classical trace
/// `prefix`. The prefix must end at a round boundary.
pub fn view_reconstruct(
    protocol: &QuantizedProtocol,
    inputs: &[u64],
    t: usize,
    policy: &dyn FailStopPolicy,
    prefix: &ExecutionTrace,
) -> Result<Terminal, AdversaryError> {
    let engine =
        SyncEngine::new(protocol, inputs.to_vec()).with_adversary(t, SyncAdversary::FailStopFull(policy));
    let end = engine.replay(prefix, None).map_err(|_| AdversaryError::InconsistentPrefix)?;
    if end.trace != *prefix {
        return Err(AdversaryError::InconsistentPrefix);
    }
    Ok(end)
}

/// Private-channel Fail-stop adversary against the classical protocol. It
/// draws the same `r_A`, recomputes the quantum states from what it sees
/// and asks the quantum policy what to do.
pub struct ClassicalFailStop<'a> {
    policy: &'a dyn FailStopPolicy,
    quantum: &'a QuantizedProtocol,
    inputs: Vec<u64>,
    t: usize,
    cache: Mutex<HashMap<ExecutionTrace, Vec<SparseState>>>,
}

pub fn build_classical_failstop<'a>(
    policy: &'a dyn FailStopPolicy,
    quantum: &'a QuantizedProtocol,
    inputs: Vec<u64>,
    t: usize,
) -> ClassicalFailStop<'a> {
    ClassicalFailStop { policy, quantum, inputs, t, cache: Mutex::new(HashMap::new()) }
}

impl ClassicalFailStop<'_> {
    fn history(&self, prefix: &ExecutionTrace) -> Result<Vec<SparseState>, AdversaryError> {
        if let Some(h) = self.cache.lock().unwrap().get(prefix) {
            return Ok(h.clone());
        }
        let h = view_reconstruct(self.quantum, &self.inputs, self.t, self.policy, prefix)?.history;
        self.cache.lock().unwrap().insert(prefix.clone(), h.clone());
        Ok(h)
    }
}

impl PrivateFailStop for ClassicalFailStop<'_> {
    fn r_a_dist(&self) -> ClassicalDistribution {
        self.policy.r_a_dist()
    }

    fn act(&self, ctx: &PrivateContext<'_>) -> Result<FailStopAction, AdversaryError> {
        let prefix = ctx.trace.before_round(ctx.round);
        let views = self.history(&prefix)?;
        Ok(self.policy.act(&FullInfoContext {
            r_a: ctx.r_a,
            round: ctx.round,
            n: ctx.n,
            t: ctx.t,
            views: &views,
            corrupted: ctx.corrupted,
            in_flight: ctx.in_flight,
        }))
    }
}
