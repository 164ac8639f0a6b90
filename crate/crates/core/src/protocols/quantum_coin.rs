//! Hand-written quantum common coin.
//!
//! Each player prepares `sqrt(1/n)|0> + sqrt(1-1/n)|1>`, runs get-core with
//! CX-copied coin registers, and on return computes the AND of its coin
//! slots into a fresh ancilla with a multi-controlled X, then measures the
//! ancilla. Which slots are set is classical control information, so it
//! travels alongside each message as a mask.

use std::collections::{BTreeMap, BTreeSet};

use super::coin::{get_core_receive, CoinState, GetCoreAction, FIRST, UNSET};
use crate::qstate::{ClassicalDistribution, FunctionAdd, RegisterLayout, SparseState, StateError};
use crate::sched::{
    AsyncBranch, AsyncResult, Event, ExecutionTrace, Forker, PendingInfo, RunMode, SchedError, Scheduler,
    SchedulerChoice, TraceDistribution,
};

/// CX-copies the basis value of `source` into each (fresh or zero)
/// register in `targets`, creating missing ones with the same shape.
pub fn quantum_multicast(
    mut state: SparseState,
    source: &[usize],
    targets: &[String],
) -> Result<SparseState, StateError> {
    let dims: Vec<u16> = source.iter().map(|&s| state.layout().dim(s)).collect();
    for name in targets {
        if !state.layout().contains(name) {
            state = state.with_register_mixed(name.clone(), dims.clone())?;
        }
        let out = state.layout().sites_of(&[name])?;
        if !state.is_zero_on(&out) {
            return Err(StateError::RegisterNotZero(name.clone()));
        }
        if out.len() != source.len() {
            return Err(StateError::DimensionMismatch { expected: source.len(), got: out.len() });
        }
        let f = FunctionAdd::new(source.to_vec(), out, dims.clone(), |v| v.to_vec());
        state = state.apply_permutation(&f)?;
    }
    Ok(state)
}

type Slot = Option<(String, usize)>;

#[derive(Clone)]
struct Player {
    ctl: CoinState,
    slots: Vec<Slot>,
    sends: usize,
    returned: bool,
    depth: usize,
}

#[derive(Clone)]
struct Msg {
    from: usize,
    to: usize,
    tag: u16,
    register: Option<String>,
    /// `mask[k]`: index of slot `k` inside the register, when set.
    mask: Vec<Option<usize>>,
    seq: usize,
    depth: usize,
    start: bool,
}

#[derive(Clone)]
struct World {
    prob: f64,
    cond: f64,
    state: SparseState,
    players: Vec<Player>,
    pending: Vec<Msg>,
    seq: usize,
    steps: usize,
    decided: Vec<Option<bool>>,
    trace: ExecutionTrace,
}

/// Quantum common coin for `n` players tolerating `t` crashes.
#[derive(Debug, Clone)]
pub struct QuantumCoin {
    pub n: usize,
    pub t: usize,
    pub bias: ClassicalDistribution,
    /// Stop handling messages once returned. Off by default: a returned
    /// player keeps answering so that slower players still progress.
    pub stop_on_return: bool,
}

impl QuantumCoin {
    pub fn new(n: usize, t: usize) -> Self {
        let bias = ClassicalDistribution::bernoulli_zero(1.0 / n as f64).expect("valid bias");
        Self { n, t, bias, stop_on_return: false }
    }

    pub fn with_bias(mut self, bias: ClassicalDistribution) -> Self {
        self.bias = bias;
        self
    }

    pub fn stop_on_return(mut self, stop: bool) -> Self {
        self.stop_on_return = stop;
        self
    }

    fn coin_register(i: usize) -> String {
        format!("coin.{i}")
    }

    /// Runs the coin with the given crashed players (which never start).
    pub fn run(
        &self,
        crashed: &BTreeSet<usize>,
        scheduler: &dyn Scheduler,
        mode: RunMode,
    ) -> Result<AsyncResult, SchedError> {
        let n = self.n;
        let mut fk = Forker::new(mode);
        let start = World {
            prob: 1.0,
            cond: 1.0,
            state: SparseState::zero(RegisterLayout::new()),
            players: (0..n)
                .map(|_| Player { ctl: CoinState::new(n), slots: vec![None; n], sends: 0, returned: false, depth: 0 })
                .collect(),
            pending: (0..n)
                .filter(|i| !crashed.contains(i))
                .map(|i| Msg {
                    from: i,
                    to: i,
                    tag: FIRST,
                    register: None,
                    mask: Vec::new(),
                    seq: i,
                    depth: 0,
                    start: true,
                })
                .collect(),
            seq: n,
            steps: 0,
            decided: vec![None; n],
            trace: ExecutionTrace::new(0),
        };
        let max_total = n * (3 * n + 1);
        let mut stack = vec![start];
        let mut distribution = TraceDistribution::default();
        let mut branches = Vec::new();
        while let Some(mut w) = stack.pop() {
            if self.stop_on_return {
                let decided = w.decided.clone();
                w.pending.retain(|m| decided[m.to].is_none());
            }
            let choice = if w.pending.is_empty() || w.steps >= max_total {
                SchedulerChoice::Halt
            } else {
                let infos: Vec<PendingInfo> = w
                    .pending
                    .iter()
                    .map(|m| PendingInfo { to: m.to, from: (!m.start).then_some(m.from), seq: m.seq })
                    .collect();
                scheduler.choose(&infos, &w.trace)
            };
            match choice {
                SchedulerChoice::Halt => {
                    let live: Vec<usize> = (0..n).filter(|i| !crashed.contains(i)).collect();
                    distribution.add(w.trace.clone(), w.prob);
                    branches.push(AsyncBranch {
                        decisions: live.iter().filter_map(|&i| w.decided[i].map(|d| (i, d))).collect(),
                        admissible: w.pending.is_empty(),
                        complete: live.iter().all(|&i| w.decided[i].is_some()),
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

    fn multicast(&self, w: &mut World, i: usize, tag: u16, depth: usize) -> Result<(), StateError> {
        let p = &mut w.players[i];
        p.sends += 1;
        let mut source = Vec::new();
        let mut mask = vec![None; self.n];
        for (k, slot) in p.slots.iter().enumerate() {
            if let Some((reg, site)) = slot {
                let r = w.state.layout().get(reg)?;
                mask[k] = Some(source.len());
                source.push(r.offset + site);
            }
        }
        let names: Vec<String> = (0..self.n).map(|j| format!("q.{i}.{}.{j}", p.sends)).collect();
        let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
        w.state = quantum_multicast(st, &source, &names)?;
        for (j, name) in names.into_iter().enumerate() {
            w.pending.push(Msg {
                from: i,
                to: j,
                tag,
                register: Some(name),
                mask: mask.clone(),
                seq: w.seq,
                depth,
                start: false,
            });
            w.seq += 1;
        }
        Ok(())
    }

    fn step(&self, mut w: World, idx: usize, fk: &mut Forker) -> Result<Vec<World>, SchedError> {
        let n = self.n;
        let m = w.pending.remove(idx);
        let i = m.to;
        let depth = if m.start { 1 } else { w.players[i].depth.max(m.depth + 1) };
        w.players[i].depth = depth;
        w.steps += 1;
        w.trace.events.push(Event::Step { player: i, from: (!m.start).then_some(m.from), depth });

        if m.start {
            let name = Self::coin_register(i);
            let st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
            w.state = st.with_register(&name, 1, 2)?.prepare_distribution(&name, &self.bias)?;
            w.players[i].slots[i] = Some((name, 0));
            w.players[i].ctl.coins[i] = 0;
            self.multicast(&mut w, i, FIRST, depth)?;
            w.trace.events.push(Event::Decision { player: i, d: None });
            w.trace.events.push(Event::Pattern { player: i, b: vec![1; n] });
            return Ok(vec![w]);
        }

        // Classical control: which slots the message carries.
        let reg = m.register.clone().expect("non-start messages carry a register");
        let values: Vec<u16> = m.mask.iter().map(|s| if s.is_some() { 0 } else { UNSET }).collect();
        let before: Vec<bool> = w.players[i].ctl.coins.iter().map(|&c| c != UNSET).collect();
        let action = get_core_receive(&mut w.players[i].ctl, n, self.t, m.from, m.tag, &values);
        for k in 0..n {
            let takes = if m.tag == FIRST { k == m.from } else { !before[k] && m.mask[k].is_some() };
            if takes {
                w.players[i].slots[k] = Some((reg.clone(), m.mask[k].expect("slot present")));
            }
        }
        let was_returned = w.players[i].returned;
        match action {
            GetCoreAction::Multicast(tag) => {
                self.multicast(&mut w, i, tag, depth)?;
                if !was_returned {
                    w.trace.events.push(Event::Decision { player: i, d: None });
                }
                w.trace.events.push(Event::Pattern { player: i, b: vec![1; n] });
                Ok(vec![w])
            }
            GetCoreAction::Return if !was_returned => self.finish(w, i, fk),
            _ => {
                if !was_returned {
                    w.trace.events.push(Event::Decision { player: i, d: None });
                }
                w.trace.events.push(Event::Pattern { player: i, b: vec![0; n] });
                Ok(vec![w])
            }
        }
    }

    /// Defaults unset slots to `|1>`, applies the multi-controlled X into a
    /// fresh ancilla and measures it.
    fn finish(&self, mut w: World, i: usize, fk: &mut Forker) -> Result<Vec<World>, SchedError> {
        let n = self.n;
        let mut st = std::mem::replace(&mut w.state, SparseState::zero(RegisterLayout::new()));
        for k in 0..n {
            if w.players[i].slots[k].is_none() {
                let name = format!("one.{i}.{k}");
                st = st.with_register(&name, 1, 2)?.prepare_distribution(&name, &ClassicalDistribution::point(1))?;
                w.players[i].slots[k] = Some((name, 0));
            }
        }
        let controls: Vec<usize> = w.players[i].slots.iter().flatten().map(|(r, s)| st.layout().get(r).map(|r| r.offset + s)).collect::<Result<_, _>>()?;
        let anc = format!("anc.{i}");
        st = st.with_register(&anc, 1, 2)?;
        let target = st.layout().sites_of(&[&anc])?;
        st = st.apply_permutation(&FunctionAdd::new(controls, target.clone(), vec![2], |v| {
            vec![u16::from(v.iter().all(|&x| x == 1))]
        }))?;
        w.players[i].returned = true;
        let mut out = Vec::new();
        for b in st.measurement_branches(&target)? {
            let mut c = w.clone();
            let d = b.outcome[0] == 1;
            c.state = b.state;
            c.prob *= b.probability;
            c.cond = b.probability;
            c.decided[i] = Some(d);
            c.trace.events.push(Event::Decision { player: i, d: Some(d) });
            out.push(c);
        }
        fk.select(out, |w| w.cond, |w| w.prob, |w| &w.trace)
    }
}

/// Exact value of the strengthened core-set game: an adversary picks the
/// sets `V_1..V_m` of coins each terminating player ends up with, subject to
/// `|V_1 ∩ .. ∩ V_m| >= ceil(n/2)`, seeing after each pick whether `V_i`
/// contained a 0. Returns the minimum over adaptive strategies of
/// `Pr[every player outputs 0]` and the first set of a minimizing strategy.
#[derive(Debug, Clone)]
pub struct CoreSetGame {
    pub n: usize,
    pub m: usize,
    pub min_all_zero: f64,
    pub strategy: Vec<BTreeSet<usize>>,
}

pub fn core_set_game(n: usize, t: usize, bias: &ClassicalDistribution) -> Result<CoreSetGame, StateError> {
    let mut layout = RegisterLayout::new();
    for j in 0..n {
        layout.add(format!("coin.{j}"), 1, 2)?;
    }
    let mut state = SparseState::zero(layout);
    for j in 0..n {
        state = state.prepare_distribution(&format!("coin.{j}"), bias)?;
    }
    let m = n - t;
    let need = n.div_ceil(2);
    let full = (1u32 << n) - 1;
    let mut memo = BTreeMap::new();
    let (v, first) = game_value(&state, n, m, 0, full, need, &mut memo)?;
    let strategy = first.map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).collect()).into_iter().collect();
    Ok(CoreSetGame { n, m, min_all_zero: v, strategy })
}

type Memo = BTreeMap<(Vec<(Vec<u16>, u64)>, usize, u32), (f64, Option<u32>)>;

fn game_value(
    state: &SparseState,
    n: usize,
    m: usize,
    depth: usize,
    inter: u32,
    need: usize,
    memo: &mut Memo,
) -> Result<(f64, Option<u32>), StateError> {
    if depth == m {
        return Ok((1.0, None));
    }
    let coin_sites: Vec<usize> = (0..n).collect();
    let key_state: Vec<(Vec<u16>, u64)> = state
        .marginal(&coin_sites)
        .into_iter()
        .map(|(k, p)| (k, (p * 1e12).round() as u64))
        .collect();
    let key = (key_state, depth, inter);
    if let Some(v) = memo.get(&key) {
        return Ok(*v);
    }
    let mut best = (f64::INFINITY, None);
    for mask in 1u32..(1 << n) {
        let next = inter & mask;
        if (next.count_ones() as usize) < need {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let anc = format!("anc.{depth}.{mask}");
        let st = state.clone().with_register(&anc, 1, 2)?;
        let target = st.layout().sites_of(&[&anc])?;
        let st = st.apply_permutation(&FunctionAdd::new(members, target.clone(), vec![2], |v| {
            vec![u16::from(v.iter().all(|&x| x == 1))]
        }))?;
        let mut value = 0.0;
        for b in st.measurement_branches(&target)? {
            if b.outcome[0] == 0 {
                let sub = b.state.without_registers(std::slice::from_ref(&anc))?;
                value += b.probability * game_value(&sub, n, m, depth + 1, next, need, memo)?.0;
            }
        }
        if value < best.0 - 1e-15 {
            best = (value, Some(mask));
        }
    }
    memo.insert(key, best);
    Ok(best)
}
