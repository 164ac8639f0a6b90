use std::collections::{BTreeMap, BTreeSet};

use super::{Event, ExecutionTrace, Forker, RunMode, SchedError, TraceDistribution};
use crate::adversary::{
    check_corruption, AdvOp, AdversaryError, ByzantineContext, ByzantinePolicy, FailStopAction, FailStopPolicy,
    FullInfoContext, PrivateContext, PrivateFailStop, Resimulator,
};
use crate::normalform::{copy_register, PlayerRegs, QuantizedProtocol, ReceivedRegs};
use crate::qstate::{DenseUnitary, RegisterLayout, SiteRelabel, SparseState};

/// Adversary driving a synchronous run.
#[derive(Clone, Copy)]
pub enum SyncAdversary<'a> {
    None,
    /// Sees the full global state (all views) when choosing.
    FailStopFull(&'a dyn FailStopPolicy),
    /// Sees only its randomness and the classical trace.
    FailStopPrivate(&'a dyn PrivateFailStop),
    Byzantine { policy: &'a dyn ByzantinePolicy, resimulator: Option<&'a dyn Resimulator> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Active,
    Decided(bool),
    Crashed,
}

#[derive(Debug, Clone)]
struct Flight {
    from: usize,
    to: usize,
    register: String,
    log: usize,
    /// Round in which the receiver consumes it.
    deliver_at: usize,
}

/// One message ever placed on a channel.
#[derive(Debug, Clone)]
pub struct LoggedMessage {
    pub from: usize,
    pub to: usize,
    pub round: usize,
    pub register: String,
    /// Sender's copy register (honest senders only).
    pub copy: Option<String>,
    pub delivered: bool,
}

#[derive(Clone)]
pub(crate) struct World {
    prob: f64,
    cond: f64,
    state: SparseState,
    regs: Vec<PlayerRegs>,
    status: Vec<Status>,
    corrupted: BTreeSet<usize>,
    in_flight: Vec<Flight>,
    /// Register name to holder; `None` is the adversary's own workspace.
    owners: BTreeMap<String, Option<usize>>,
    log: Vec<LoggedMessage>,
    trace: ExecutionTrace,
    history: Vec<SparseState>,
    measured: Vec<String>,
    round: usize,
}

/// A finished (or halted) branch.
#[derive(Clone)]
pub struct Terminal {
    pub trace: ExecutionTrace,
    pub probability: f64,
    pub state: SparseState,
    pub corrupted: BTreeSet<usize>,
    pub regs: Vec<PlayerRegs>,
    /// Registers held by corrupted players or the adversary.
    pub bad_registers: Vec<String>,
    /// Global state after each round; entry 0 is the initial state.
    pub history: Vec<SparseState>,
    /// Registers measured by honest players, in order.
    pub measured: Vec<String>,
    pub messages: Vec<LoggedMessage>,
    pub decisions: BTreeMap<usize, bool>,
    /// False when the round limit was hit before every good player decided.
    pub complete: bool,
}

pub struct RunResult {
    pub distribution: TraceDistribution,
    pub terminals: Vec<Terminal>,
    pub branches: usize,
}

/// Synchronous execution of a quantized (or, with `classical`, sampled
/// randomness) protocol against an adversary.
pub struct SyncEngine<'a> {
    pub protocol: &'a QuantizedProtocol,
    pub inputs: Vec<u64>,
    pub t: usize,
    /// Measure each player's randomness right after preparing it.
    pub classical: bool,
    pub adversary: SyncAdversary<'a>,
    pub max_rounds: usize,
}

impl<'a> SyncEngine<'a> {
    pub fn new(protocol: &'a QuantizedProtocol, inputs: Vec<u64>) -> Self {
        let max_rounds = protocol.protocol().max_steps();
        Self { protocol, inputs, t: 0, classical: false, adversary: SyncAdversary::None, max_rounds }
    }

    pub fn with_adversary(mut self, t: usize, adversary: SyncAdversary<'a>) -> Self {
        self.t = t;
        self.adversary = adversary;
        self
    }

    pub fn classical(mut self, classical: bool) -> Self {
        self.classical = classical;
        self
    }

    fn n(&self) -> usize {
        self.protocol.n()
    }

    fn initial_worlds(&self) -> Result<Vec<World>, SchedError> {
        let n = self.n();
        if self.inputs.len() != n {
            return Err(SchedError::InputCount(n, self.inputs.len()));
        }
        let r_a_dist = match self.adversary {
            SyncAdversary::None => crate::qstate::ClassicalDistribution::point(0),
            SyncAdversary::FailStopFull(p) => p.r_a_dist(),
            SyncAdversary::FailStopPrivate(p) => p.r_a_dist(),
            SyncAdversary::Byzantine { policy, .. } => policy.r_a_dist(),
        };
        let state = SparseState::zero(RegisterLayout::new());
        let regs: Vec<PlayerRegs> = (0..n).map(|i| PlayerRegs::new(i, n, self.inputs[i])).collect();
        Ok(r_a_dist
            .iter()
            .map(|(r_a, p)| World {
                prob: p,
                cond: p,
                state: state.clone(),
                regs: regs.clone(),
                status: vec![Status::Active; n],
                corrupted: BTreeSet::new(),
                in_flight: Vec::new(),
                owners: BTreeMap::new(),
                log: Vec::new(),
                trace: ExecutionTrace::new(r_a),
                history: vec![state.clone()],
                measured: Vec::new(),
                round: 0,
            })
            .collect())
    }

    /// Runs to completion under `mode`.
    pub fn run(&self, mode: RunMode) -> Result<RunResult, SchedError> {
        let mut fk = Forker::new(mode);
        let starts = self.initial_worlds()?;
        let mut stack = fk.select(starts, |w| w.cond, |w| w.prob, |w| &w.trace)?;
        stack.reverse();
        let mut terminals = Vec::new();
        let mut distribution = TraceDistribution::default();
        while let Some(w) = stack.pop() {
            if let Some(done) = self.finished(&w) {
                distribution.add(w.trace.clone(), w.prob);
                terminals.push(self.terminal(w, done));
                continue;
            }
            let (next, _) = self.round(w, &mut fk)?;
            stack.extend(next.into_iter().rev());
        }
        distribution.pruned_mass = fk.pruned;
        Ok(RunResult { distribution, terminals, branches: fk.created })
    }

    /// Follows the branch whose trace is `target`. Without a halt round the
    /// replay stops when the trace equals `target` at a round boundary;
    /// with `halt_after_corruption = Some(k)` it stops right after the
    /// corruption step of round `k`.
    pub fn replay(&self, target: &ExecutionTrace, halt_after_corruption: Option<usize>) -> Result<Terminal, SchedError> {
        let mut fk = Forker::new(RunMode::Replay { target: target.clone(), halt_after_corruption });
        let mut worlds = fk.select(self.initial_worlds()?, |w| w.cond, |w| w.prob, |w| &w.trace)?;
        loop {
            let w = worlds.pop().ok_or(SchedError::ReplayMismatch)?;
            if halt_after_corruption.is_none() && w.trace == *target {
                return Ok(self.terminal(w, false));
            }
            if let Some(done) = self.finished(&w) {
                if w.trace == *target {
                    return Ok(self.terminal(w, done));
                }
                return Err(SchedError::ReplayMismatch);
            }
            let (next, halted) = self.round(w, &mut fk)?;
            if let Some(h) = halted {
                return Ok(self.terminal(h, false));
            }
            worlds = next;
        }
    }

    /// `Some(complete)` when the branch ends here.
    fn finished(&self, w: &World) -> Option<bool> {
        let all_done = (0..self.n()).all(|i| w.corrupted.contains(&i) || w.status[i] != Status::Active);
        if all_done {
            Some(true)
        } else if w.round >= self.max_rounds {
            Some(false)
        } else {
            None
        }
    }

    fn terminal(&self, w: World, complete: bool) -> Terminal {
        let bad_registers = bad_registers(&w);
        let decisions = (0..self.n())
            .filter_map(|i| match w.status[i] {
                Status::Decided(d) => Some((i, d)),
                _ => None,
            })
            .collect();
        Terminal {
            trace: w.trace,
            probability: w.prob,
            state: w.state,
            corrupted: w.corrupted,
            regs: w.regs,
            bad_registers,
            history: w.history,
            measured: w.measured,
            messages: w.log,
            decisions,
            complete,
        }
    }

    /// One round on one world. Returns the successor worlds and, in a
    /// halting replay, the world stopped after corruption.
    fn round(&self, mut w: World, fk: &mut Forker) -> Result<(Vec<World>, Option<World>), SchedError> {
        w.round += 1;
        let k = w.round;
        w.trace.events.push(super::Event::Round(k));
        let mut worlds = match self.adversary {
            SyncAdversary::None => vec![w],
            SyncAdversary::FailStopFull(policy) => {
                let flights: Vec<(usize, usize)> = w.in_flight.iter().map(|f| (f.from, f.to)).collect();
                let ctx = FullInfoContext {
                    r_a: w.trace.r_a,
                    round: k,
                    n: self.n(),
                    t: self.t,
                    views: &w.history,
                    corrupted: &w.corrupted,
                    in_flight: &flights,
                };
                let action = policy.act(&ctx);
                self.apply_failstop(&mut w, action)?;
                vec![w]
            }
            SyncAdversary::FailStopPrivate(policy) => {
                let flights: Vec<(usize, usize)> = w.in_flight.iter().map(|f| (f.from, f.to)).collect();
                let ctx = PrivateContext {
                    r_a: w.trace.r_a,
                    round: k,
                    n: self.n(),
                    t: self.t,
                    trace: &w.trace,
                    corrupted: &w.corrupted,
                    in_flight: &flights,
                };
                let action = policy.act(&ctx)?;
                self.apply_failstop(&mut w, action)?;
                vec![w]
            }
            SyncAdversary::Byzantine { policy, resimulator } => {
                let (ws, halted) = self.byzantine_phase(w, policy, resimulator, fk)?;
                if halted.is_some() {
                    return Ok((Vec::new(), halted));
                }
                ws
            }
        };

        // Honest steps, player by player.
        for j in 0..self.n() {
            let mut next = Vec::new();
            for w in worlds {
                if w.corrupted.contains(&j) || w.status[j] != Status::Active {
                    next.push(w);
                    continue;
                }
                next.extend(self.honest_step(w, j, k, fk)?);
            }
            worlds = next;
        }
        for w in &mut worlds {
            // Undelivered messages to players that stopped are dropped.
            w.in_flight.retain(|f| f.deliver_at > k);
            w.history.push(w.state.clone());
        }
        Ok((worlds, None))
    }

    fn apply_failstop(&self, w: &mut World, action: FailStopAction) -> Result<(), SchedError> {
        check_corruption(&w.corrupted, &action.corrupt, self.t)?;
        let newly: BTreeSet<usize> = action.corrupt.difference(&w.corrupted).copied().collect();
        for &(from, to) in &action.deliver {
            let ok = newly.contains(&from) && w.in_flight.iter().any(|f| f.from == from && f.to == to);
            if !ok {
                return Err(AdversaryError::BadDelivery(from, to).into());
            }
        }
        for &i in &newly {
            w.status[i] = Status::Crashed;
        }
        w.in_flight.retain(|f| !newly.contains(&f.from) || action.deliver.contains(&(f.from, f.to)));
        w.corrupted = action.corrupt;
        Ok(())
    }

    fn honest_step(&self, mut w: World, j: usize, k: usize, fk: &mut Forker) -> Result<Vec<World>, SchedError> {
        let n = self.n();
        let mut received = vec![None; n];
        let mut taken = Vec::new();
        for (idx, f) in w.in_flight.iter().enumerate() {
            if f.to == j && f.deliver_at == k {
                received[f.from] = Some(f.register.clone());
                taken.push(idx);
            }
        }
        for &idx in taken.iter().rev() {
            let f = w.in_flight.remove(idx);
            w.log[f.log].delivered = true;
            w.owners.insert(f.register, Some(j));
        }
        let state = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
        let branches = self.protocol.run_step(state, &w.regs[j], ReceivedRegs::Sync(received), self.classical)?;
        let mut out = Vec::with_capacity(branches.len());
        for br in branches {
            let mut c = w.clone();
            c.prob *= br.probability;
            c.cond = br.probability;
            let step = br.regs.steps.len();
            for reg in br.state.layout().registers() {
                c.owners.entry(reg.name.clone()).or_insert(Some(j));
            }
            c.state = br.state;
            c.regs[j] = br.regs;
            c.measured.push(crate::normalform::decision_register(j, step));
            c.trace.events.push(Event::Decision { player: j, d: br.decision });
            if let Some(d) = br.decision {
                c.status[j] = Status::Decided(d);
            }
            if let Some(b) = br.pattern {
                c.measured.push(crate::normalform::pattern_register(j, step));
                c.trace.events.push(Event::Pattern { player: j, b });
            }
            for (to, register) in br.outgoing {
                c.log.push(LoggedMessage {
                    from: j,
                    to,
                    round: k,
                    register: register.clone(),
                    copy: Some(copy_register(j, step, to)),
                    delivered: false,
                });
                let log = c.log.len() - 1;
                c.in_flight.push(Flight { from: j, to, register, log, deliver_at: k + 1 });
            }
            out.push(c);
        }
        fk.select(out, |w| w.cond, |w| w.prob, |w| &w.trace)
    }
}

fn is_bad(w: &World, owner: &Option<usize>) -> bool {
    match owner {
        None => true,
        Some(i) => w.corrupted.contains(i),
    }
}

fn bad_registers(w: &World) -> Vec<String> {
    w.state
        .layout()
        .registers()
        .iter()
        .filter(|r| w.owners.get(&r.name).map(|o| is_bad(w, o)).unwrap_or(false))
        .map(|r| r.name.clone())
        .collect()
}

fn flight_list(w: &World) -> Vec<(usize, usize, String)> {
    w.in_flight.iter().map(|f| (f.from, f.to, f.register.clone())).collect()
}

/// Hands in-flight messages addressed to corrupted players to the adversary.
fn capture_inbound(w: &mut World) {
    let flights = std::mem::take(&mut w.in_flight);
    for f in flights {
        if w.corrupted.contains(&f.to) {
            w.log[f.log].delivered = true;
            w.owners.insert(f.register, Some(f.to));
        } else {
            w.in_flight.push(f);
        }
    }
}

impl<'a> SyncEngine<'a> {
    fn check_bad(&self, w: &World, register: &str) -> Result<(), SchedError> {
        match w.owners.get(register) {
            Some(o) if is_bad(w, o) => Ok(()),
            _ => Err(AdversaryError::NotCorrupted(register.to_string()).into()),
        }
    }

    fn site_of(&self, w: &World, r: &crate::adversary::SiteRef) -> Result<usize, SchedError> {
        self.check_bad(w, &r.register)?;
        let reg = w.state.layout().get(&r.register)?;
        if r.site >= reg.sites {
            return Err(crate::qstate::StateError::SiteOutOfRange(r.site).into());
        }
        Ok(reg.offset + r.site)
    }

    /// Applies adversary operations; every measurement forks. Returns
    /// `(world, outcomes)` with `cond` set to the joint conditional weight.
    fn apply_ops(&self, w: World, ops: &[AdvOp]) -> Result<Vec<(World, Vec<u16>)>, SchedError> {
        let mut worlds = vec![(w, Vec::new(), 1.0f64)];
        for op in ops {
            let mut next = Vec::new();
            for (mut w, out, cond) in worlds {
                match op {
                    AdvOp::Alloc { name, dims } => {
                        let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
                        w.state = st.with_register_mixed(name.clone(), dims.clone())?;
                        w.owners.insert(name.clone(), None);
                        next.push((w, out, cond));
                    }
                    AdvOp::Dense { targets, matrix } => {
                        let sites = targets.iter().map(|t| self.site_of(&w, t)).collect::<Result<Vec<_>, _>>()?;
                        let u = DenseUnitary::new(sites, matrix.clone())?;
                        let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
                        w.state = st.apply_dense_unitary(&u)?;
                        next.push((w, out, cond));
                    }
                    AdvOp::Shift { targets, delta } => {
                        let sites = targets.iter().map(|t| self.site_of(&w, t)).collect::<Result<Vec<_>, _>>()?;
                        let dims = sites.iter().map(|&s| w.state.layout().dim(s)).collect();
                        let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
                        w.state = st.apply_permutation(&SiteRelabel::shift(sites, delta.clone(), dims))?;
                        next.push((w, out, cond));
                    }
                    AdvOp::Cx { control, target } => {
                        let c = self.site_of(&w, control)?;
                        let t = self.site_of(&w, target)?;
                        let dt = w.state.layout().dim(t);
                        let perm = SiteRelabel::new(vec![c, t], move |v| vec![v[0], (v[1] + v[0]) % dt]);
                        let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
                        w.state = st.apply_permutation(&perm)?;
                        next.push((w, out, cond));
                    }
                    AdvOp::Measure { targets } => {
                        let sites = targets.iter().map(|t| self.site_of(&w, t)).collect::<Result<Vec<_>, _>>()?;
                        for b in w.state.measurement_branches(&sites)? {
                            let mut c = w.clone();
                            c.state = b.state;
                            c.prob *= b.probability;
                            let mut o = out.clone();
                            o.extend(b.outcome);
                            next.push((c, o, cond * b.probability));
                        }
                    }
                }
            }
            worlds = next;
        }
        Ok(worlds
            .into_iter()
            .map(|(mut w, o, cond)| {
                w.cond = cond;
                (w, o)
            })
            .collect())
    }

    /// Adversary part of a Byzantine round.
    fn byzantine_phase(
        &self,
        mut w: World,
        policy: &dyn ByzantinePolicy,
        resimulator: Option<&dyn Resimulator>,
        fk: &mut Forker,
    ) -> Result<(Vec<World>, Option<World>), SchedError> {
        let k = w.round;
        let n = self.n();
        capture_inbound(&mut w);
        let pre = {
            let flights = flight_list(&w);
            let ctx = ByzantineContext {
                r_a: w.trace.r_a,
                round: k,
                n,
                t: self.t,
                trace: &w.trace,
                corrupted: &w.corrupted,
                in_flight: &flights,
            };
            policy.pre_ops(&ctx)
        };
        let mut after_pre = Vec::new();
        for (mut c, a) in self.apply_ops(w, &pre)? {
            c.trace.events.push(Event::Adv(a));
            after_pre.push(c);
        }
        let after_pre = fk.select(after_pre, |w| w.cond, |w| w.prob, |w| &w.trace)?;

        let halt = match &fk.mode {
            RunMode::Replay { halt_after_corruption, .. } => *halt_after_corruption == Some(k),
            _ => false,
        };
        let mut after_corrupt = Vec::new();
        for mut w in after_pre {
            let a = match w.trace.events.last() {
                Some(Event::Adv(a)) => a.clone(),
                _ => Vec::new(),
            };
            let (next_set, ops) = {
                let flights = flight_list(&w);
                let ctx = ByzantineContext {
                    r_a: w.trace.r_a,
                    round: k,
                    n,
                    t: self.t,
                    trace: &w.trace,
                    corrupted: &w.corrupted,
                    in_flight: &flights,
                };
                policy.corrupt(&ctx, &a)
            };
            check_corruption(&w.corrupted, &next_set, self.t)?;
            let fresh = next_set.len() > w.corrupted.len();
            w.corrupted = next_set;
            capture_inbound(&mut w);
            if halt {
                return Ok((Vec::new(), Some(w)));
            }
            if fresh && self.classical {
                if let Some(r) = resimulator {
                    self.resimulate(&mut w, r)?;
                }
            }
            for (mut c, a_prime) in self.apply_ops(w, &ops)? {
                c.trace.events.push(Event::AdvPrime(a_prime));
                after_corrupt.push(c);
            }
        }
        let after_corrupt = fk.select(after_corrupt, |w| w.cond, |w| w.prob, |w| &w.trace)?;

        let mut out = Vec::new();
        for mut w in after_corrupt {
            let (a, a_prime) = last_adv(&w.trace);
            let deliveries = {
                let flights = flight_list(&w);
                let ctx = ByzantineContext {
                    r_a: w.trace.r_a,
                    round: k,
                    n,
                    t: self.t,
                    trace: &w.trace,
                    corrupted: &w.corrupted,
                    in_flight: &flights,
                };
                policy.deliveries(&ctx, &a, &a_prime)
            };
            // Messages of corrupted senders travel only when the policy delivers them.
            let corrupted = w.corrupted.clone();
            w.in_flight.retain(|f| !corrupted.contains(&f.from));
            let dims = self.protocol.protocol().alphabet().dims.clone();
            let mut measure = Vec::new();
            for d in deliveries {
                if !w.corrupted.contains(&d.from) || w.corrupted.contains(&d.to) || d.to >= n {
                    return Err(AdversaryError::BadDelivery(d.from, d.to).into());
                }
                self.check_bad(&w, &d.register)?;
                let got = &w.state.layout().get(&d.register)?.dims;
                if *got != dims {
                    return Err(crate::qstate::StateError::DimensionMismatch { expected: dims.len(), got: got.len() }.into());
                }
                w.owners.insert(d.register.clone(), Some(d.to));
                w.log.push(LoggedMessage {
                    from: d.from,
                    to: d.to,
                    round: k,
                    register: d.register.clone(),
                    copy: None,
                    delivered: false,
                });
                let log = w.log.len() - 1;
                measure.push(d.register.clone());
                w.in_flight.push(Flight { from: d.from, to: d.to, register: d.register, log, deliver_at: k });
            }
            if self.classical && !measure.is_empty() {
                // Classical channels: what a good player receives is a basis value.
                let sites = w.state.layout().sites_of(&measure)?;
                let mut sib = Vec::new();
                for b in w.state.measurement_branches(&sites)? {
                    let mut c = w.clone();
                    c.state = b.state;
                    c.prob *= b.probability;
                    c.cond = b.probability;
                    sib.push(c);
                }
                out.extend(fk.select(sib, |w| w.cond, |w| w.prob, |w| &w.trace)?);
            } else {
                out.push(w);
            }
        }
        Ok((out, None))
    }

    /// Replaces the corrupted side of a classical branch by the state the
    /// quantum adversary would hold given the same transcript.
    fn resimulate(&self, w: &mut World, r: &dyn Resimulator) -> Result<(), SchedError> {
        let bad = bad_registers(w);
        let mut transcript = Vec::new();
        for m in &w.log {
            let from_bad = w.corrupted.contains(&m.from);
            let to_bad = w.corrupted.contains(&m.to);
            let reg = match (from_bad, to_bad) {
                (false, true) => m.copy.clone(),
                (true, false) if m.delivered => Some(m.register.clone()),
                _ => None,
            };
            if let Some(reg) = reg {
                let sites = w.state.layout().sites_of(&[&reg])?;
                let v = w.state.definite_value(&sites).ok_or(crate::qstate::StateError::NotProduct)?;
                transcript.push((reg, v));
            }
        }
        let psi = r.resimulate(&w.trace, w.round, &transcript, &bad).map_err(SchedError::Adversary)?;
        let good: Vec<String> = w
            .state
            .layout()
            .registers()
            .iter()
            .filter(|reg| !bad.contains(&reg.name))
            .map(|reg| reg.name.clone())
            .collect();
        let layout = w.state.layout().clone();
        let good_part = if good.is_empty() {
            SparseState::zero(RegisterLayout::new())
        } else {
            w.state.factor(&good)?
        };
        w.state = SparseState::compose(layout, &[&good_part, &psi])?;
        Ok(())
    }
}

fn last_adv(trace: &ExecutionTrace) -> (Vec<u16>, Vec<u16>) {
    let mut a = Vec::new();
    let mut ap = Vec::new();
    for e in trace.events.iter().rev() {
        match e {
            Event::AdvPrime(x) if ap.is_empty() => ap = x.clone(),
            Event::Adv(x) => {
                a = x.clone();
                break;
            }
            _ => {}
        }
    }
    (a, ap)
}
