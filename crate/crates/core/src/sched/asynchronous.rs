use std::collections::{BTreeMap, BTreeSet};

use super::{Event, ExecutionTrace, Forker, RunMode, SchedError, TraceDistribution};
use crate::normalform::{PlayerRegs, QuantizedProtocol, ReceivedRegs};
use crate::qstate::{RegisterLayout, SparseState};

/// A deliverable event offered to the scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingInfo {
    pub to: usize,
    /// `None` for the player's input.
    pub from: Option<usize>,
    /// Order in which the message was sent.
    pub seq: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerChoice {
    Deliver(usize),
    /// Stop the run (the remaining messages stay undelivered).
    Halt,
}

/// Picks the next delivery. Must be a function of the classical history.
pub trait Scheduler: Send + Sync {
    fn choose(&self, pending: &[PendingInfo], trace: &ExecutionTrace) -> SchedulerChoice;
}

/// Inputs first, then messages in sending order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fifo;

impl Scheduler for Fifo {
    fn choose(&self, pending: &[PendingInfo], _: &ExecutionTrace) -> SchedulerChoice {
        pending
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| (p.from.is_some(), p.seq))
            .map(|(i, _)| SchedulerChoice::Deliver(i))
            .unwrap_or(SchedulerChoice::Halt)
    }
}

#[derive(Clone)]
struct Pending {
    info: PendingInfo,
    register: Option<String>,
    depth: usize,
}

#[derive(Clone)]
struct AWorld {
    prob: f64,
    cond: f64,
    state: SparseState,
    regs: Vec<PlayerRegs>,
    decided: Vec<Option<bool>>,
    depth: Vec<usize>,
    pending: Vec<Pending>,
    seq: usize,
    trace: ExecutionTrace,
    steps: usize,
}

/// Outcome of an asynchronous run.
pub struct AsyncResult {
    pub distribution: TraceDistribution,
    pub branches: Vec<AsyncBranch>,
    pub created: usize,
}

#[derive(Clone)]
pub struct AsyncBranch {
    pub trace: ExecutionTrace,
    pub probability: f64,
    pub state: SparseState,
    pub decisions: BTreeMap<usize, bool>,
    /// Every message addressed to a live player was delivered.
    pub admissible: bool,
    /// Every live player decided.
    pub complete: bool,
}

/// Asynchronous execution with a static set of crashed players, which never
/// take a step.
pub struct AsyncEngine<'a> {
    pub protocol: &'a QuantizedProtocol,
    pub inputs: Vec<u64>,
    pub crashed: BTreeSet<usize>,
    pub classical: bool,
    pub scheduler: &'a dyn Scheduler,
    /// Bound on the total number of steps of one run.
    pub max_total_steps: usize,
}

impl<'a> AsyncEngine<'a> {
    pub fn new(protocol: &'a QuantizedProtocol, inputs: Vec<u64>, scheduler: &'a dyn Scheduler) -> Self {
        let n = protocol.n();
        let max_total_steps = n * protocol.protocol().max_steps();
        Self { protocol, inputs, crashed: BTreeSet::new(), classical: false, scheduler, max_total_steps }
    }

    pub fn with_crashed(mut self, crashed: BTreeSet<usize>) -> Self {
        self.crashed = crashed;
        self
    }

    pub fn classical(mut self, classical: bool) -> Self {
        self.classical = classical;
        self
    }

    pub fn run(&self, mode: RunMode) -> Result<AsyncResult, SchedError> {
        let n = self.protocol.n();
        if self.inputs.len() != n {
            return Err(SchedError::InputCount(n, self.inputs.len()));
        }
        let mut fk = Forker::new(mode);
        let start = AWorld {
            prob: 1.0,
            cond: 1.0,
            state: SparseState::zero(RegisterLayout::new()),
            regs: (0..n).map(|i| PlayerRegs::new(i, n, self.inputs[i])).collect(),
            decided: vec![None; n],
            depth: vec![0; n],
            pending: (0..n)
                .filter(|i| !self.crashed.contains(i))
                .map(|i| Pending { info: PendingInfo { to: i, from: None, seq: i }, register: None, depth: 0 })
                .collect(),
            seq: n,
            trace: ExecutionTrace::new(0),
            steps: 0,
        };
        let mut stack = vec![start];
        let mut branches = Vec::new();
        let mut distribution = TraceDistribution::default();
        while let Some(mut w) = stack.pop() {
            // Messages to stopped players are never consumed.
            let decided = w.decided.clone();
            w.pending.retain(|p| decided[p.info.to].is_none());
            let choice = if w.pending.is_empty() || w.steps >= self.max_total_steps {
                SchedulerChoice::Halt
            } else {
                let infos: Vec<PendingInfo> = w.pending.iter().map(|p| p.info.clone()).collect();
                self.scheduler.choose(&infos, &w.trace)
            };
            match choice {
                SchedulerChoice::Halt => {
                    let live: Vec<usize> = (0..n).filter(|i| !self.crashed.contains(i)).collect();
                    let complete = live.iter().all(|&i| w.decided[i].is_some());
                    distribution.add(w.trace.clone(), w.prob);
                    branches.push(AsyncBranch {
                        decisions: live.iter().filter_map(|&i| w.decided[i].map(|d| (i, d))).collect(),
                        admissible: w.pending.is_empty(),
                        complete,
                        trace: w.trace,
                        probability: w.prob,
                        state: w.state,
                    });
                }
                SchedulerChoice::Deliver(idx) => {
                    if idx >= w.pending.len() {
                        return Err(SchedError::Inadmissible(format!("scheduler chose {idx} of {}", w.pending.len())));
                    }
                    let next = self.step(w, idx, &mut fk)?;
                    stack.extend(next.into_iter().rev());
                }
            }
        }
        distribution.pruned_mass = fk.pruned;
        Ok(AsyncResult { distribution, branches, created: fk.created })
    }

    fn step(&self, mut w: AWorld, idx: usize, fk: &mut Forker) -> Result<Vec<AWorld>, SchedError> {
        let n = self.protocol.n();
        let p = w.pending.remove(idx);
        let j = p.info.to;
        let depth = match p.info.from {
            None => 1,
            Some(_) => w.depth[j].max(p.depth + 1),
        };
        let received = match (&p.info.from, p.register) {
            (Some(from), Some(register)) => ReceivedRegs::Async { sender: *from, register },
            _ => ReceivedRegs::Start,
        };
        w.trace.events.push(Event::Step { player: j, from: p.info.from, depth });
        w.steps += 1;
        let state = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
        let out = self.protocol.run_step(state, &w.regs[j], received, self.classical)?;
        let mut worlds = Vec::with_capacity(out.len());
        for br in out {
            let mut c = w.clone();
            c.prob *= br.probability;
            c.cond = br.probability;
            c.state = br.state;
            c.regs[j] = br.regs;
            c.depth[j] = depth;
            c.trace.events.push(Event::Decision { player: j, d: br.decision });
            c.decided[j] = br.decision;
            if let Some(b) = br.pattern {
                c.trace.events.push(Event::Pattern { player: j, b });
            }
            for (to, register) in br.outgoing {
                if to >= n || self.crashed.contains(&to) {
                    continue;
                }
                c.pending.push(Pending {
                    info: PendingInfo { to, from: Some(j), seq: c.seq },
                    register: Some(register),
                    depth,
                });
                c.seq += 1;
            }
            worlds.push(c);
        }
        fk.select(worlds, |w| w.cond, |w| w.prob, |w| &w.trace)
    }
}
