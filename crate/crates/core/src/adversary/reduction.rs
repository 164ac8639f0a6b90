//! Side-by-side enumeration of `(P_Q, A_Q)` and `(P_C, A_C)`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::Serialize;

use super::{build_classical_failstop, ByzantinePolicy, ClassicalByzantine, FailStopPolicy};
use crate::normalform::{quantize, ClassicalProtocol};
use crate::qstate::BasisConfig;
use crate::sched::{ExecutionTrace, RunMode, RunResult, SchedError, SyncAdversary, SyncEngine, Terminal};

/// One trace with its probability on both sides.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub trace: ExecutionTrace,
    pub p_quantum: f64,
    pub p_classical: f64,
    /// Frobenius distance between the classical state distribution and the
    /// measured quantum state, both conditioned on this trace.
    pub state_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub protocol: String,
    pub adversary: String,
    pub tv: f64,
    pub max_state_distance: f64,
    pub rows: Vec<TraceRow>,
    pub quantum_branches: usize,
    pub classical_branches: usize,
    pub pruned_mass: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ReductionReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.tv <= tol && self.max_state_distance <= tol && self.pruned_mass <= tol
    }
}

/// `(weight, good config, unnormalized bad-side vector)`.
type Term = (f64, BasisConfig, BTreeMap<BasisConfig, Complex64>);

/// Splits a terminal's state along its good/bad cut. With `measure_all`
/// every register counts as good, i.e. the full computational-basis
/// measurement.
fn terms(t: &Terminal, measure_all: bool) -> Vec<Term> {
    let layout = t.state.layout();
    let bad: BTreeSet<usize> = if measure_all {
        BTreeSet::new()
    } else {
        layout
            .registers()
            .iter()
            .filter(|r| t.bad_registers.contains(&r.name))
            .flat_map(|r| r.range())
            .collect()
    };
    let mut by_good: BTreeMap<BasisConfig, BTreeMap<BasisConfig, Complex64>> = BTreeMap::new();
    for (cfg, a) in t.state.amplitudes() {
        let mut g = Vec::new();
        let mut b = Vec::new();
        for (s, &v) in cfg.iter().enumerate() {
            if bad.contains(&s) {
                b.push(v);
            } else {
                g.push(v);
            }
        }
        by_good.entry(g).or_default().insert(b, *a);
    }
    by_good.into_iter().map(|(g, v)| (t.probability, g, v)).collect()
}

/// Frobenius distance between `sum_C w |v><v|/p_c` and `sum_Q w |v><v|/p_q`,
/// block-diagonal in the good configuration. Matrix entries are formed
/// before squaring so equal states cancel exactly.
fn state_distance(q: &[Term], pq: f64, c: &[Term], pc: f64) -> f64 {
    let mut blocks: BTreeMap<&BasisConfig, Vec<(f64, &BTreeMap<BasisConfig, Complex64>)>> = BTreeMap::new();
    for (w, g, v) in q {
        blocks.entry(g).or_default().push((-w / pq, v));
    }
    for (w, g, v) in c {
        blocks.entry(g).or_default().push((w / pc, v));
    }
    let mut total = 0.0;
    for list in blocks.values() {
        let mut rho: BTreeMap<(&BasisConfig, &BasisConfig), Complex64> = BTreeMap::new();
        for (w, v) in list {
            for (x, a) in v.iter() {
                for (y, b) in v.iter() {
                    *rho.entry((x, y)).or_default() += a * b.conj() * *w;
                }
            }
        }
        total += rho.values().map(|z| z.norm_sqr()).sum::<f64>();
    }
    total.sqrt()
}

fn compare(quantum: RunResult, classical: RunResult, measure_all: bool) -> (f64, f64, Vec<TraceRow>, f64) {
    let tv = quantum.distribution.tv_distance(&classical.distribution);
    let mut q_by: BTreeMap<ExecutionTrace, Vec<&Terminal>> = BTreeMap::new();
    for t in &quantum.terminals {
        q_by.entry(t.trace.clone()).or_default().push(t);
    }
    let mut c_by: BTreeMap<ExecutionTrace, Vec<&Terminal>> = BTreeMap::new();
    for t in &classical.terminals {
        c_by.entry(t.trace.clone()).or_default().push(t);
    }
    let keys: BTreeSet<&ExecutionTrace> = q_by.keys().chain(c_by.keys()).collect();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for key in keys {
        let pq = quantum.distribution.prob(key);
        let pc = classical.distribution.prob(key);
        let d = match (q_by.get(key), c_by.get(key)) {
            (Some(qs), Some(cs)) => {
                let qt: Vec<Term> = qs.iter().flat_map(|t| terms(t, measure_all)).collect();
                let ct: Vec<Term> = cs.iter().flat_map(|t| terms(t, measure_all)).collect();
                let same_layout = qs.iter().chain(cs.iter()).all(|t| t.state.layout() == qs[0].state.layout());
                if same_layout {
                    state_distance(&qt, pq, &ct, pc)
                } else {
                    f64::INFINITY
                }
            }
            // A trace on one side only already shows up in the TV distance.
            _ => 0.0,
        };
        worst = worst.max(d);
        rows.push(TraceRow { trace: key.clone(), p_quantum: pq, p_classical: pc, state_distance: d });
    }
    let pruned = quantum.distribution.pruned_mass.max(classical.distribution.pruned_mass);
    (tv, worst, rows, pruned)
}

/// Enumerates the quantized protocol against the full-information Fail-stop
/// policy and the classical protocol against the adversary built from it.
pub fn check_failstop_reduction(
    protocol: &ClassicalProtocol,
    policy: &dyn FailStopPolicy,
    inputs: &[u64],
    t: usize,
    mode: RunMode,
) -> Result<ReductionReport, SchedError> {
    let start = Instant::now();
    let q = quantize(protocol.clone())?;
    let quantum = SyncEngine::new(&q, inputs.to_vec())
        .with_adversary(t, SyncAdversary::FailStopFull(policy))
        .run(mode.clone())?;
    let a_c = build_classical_failstop(policy, &q, inputs.to_vec(), t);
    let classical = SyncEngine::new(&q, inputs.to_vec())
        .classical(true)
        .with_adversary(t, SyncAdversary::FailStopPrivate(&a_c))
        .run(mode)?;
    let (qb, cb) = (quantum.branches, classical.branches);
    let (tv, max_state_distance, rows, pruned_mass) = compare(quantum, classical, true);
    Ok(ReductionReport {
        protocol: protocol.name(),
        adversary: policy.name(),
        tv,
        max_state_distance,
        rows,
        quantum_branches: qb,
        classical_branches: cb,
        pruned_mass,
        elapsed: start.elapsed(),
    })
}

/// Byzantine counterpart of [`check_failstop_reduction`]; the state check
/// measures only the good registers.
pub fn check_byzantine_reduction(
    protocol: &ClassicalProtocol,
    policy: &dyn ByzantinePolicy,
    inputs: &[u64],
    t: usize,
    mode: RunMode,
) -> Result<ReductionReport, SchedError> {
    let start = Instant::now();
    let q = quantize(protocol.clone())?;
    let quantum = SyncEngine::new(&q, inputs.to_vec())
        .with_adversary(t, SyncAdversary::Byzantine { policy, resimulator: None })
        .run(mode.clone())?;
    let a_c = ClassicalByzantine::new(policy, &q, inputs.to_vec(), t);
    let classical =
        SyncEngine::new(&q, inputs.to_vec()).classical(true).with_adversary(t, a_c.adversary()).run(mode)?;
    let (qb, cb) = (quantum.branches, classical.branches);
    let (tv, max_state_distance, rows, pruned_mass) = compare(quantum, classical, false);
    Ok(ReductionReport {
        protocol: protocol.name(),
        adversary: policy.name(),
        tv,
        max_state_distance,
        rows,
        quantum_branches: qb,
        classical_branches: cb,
        pruned_mass,
        elapsed: start.elapsed(),
    })
}
