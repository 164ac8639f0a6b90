//! Bundled adversary policies.

use std::collections::BTreeSet;

use super::{
    AdvOp, ByzantineContext, ByzantinePolicy, Delivery, FailStopAction, FailStopPolicy, FullInfoContext, SiteRef,
};
use crate::qstate::{gates, ClassicalDistribution, SparseState};

/// Never corrupts anyone.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFailStop;

impl FailStopPolicy for NoFailStop {
    fn name(&self) -> String {
        "none".into()
    }
    fn act(&self, ctx: &FullInfoContext<'_>) -> FailStopAction {
        FailStopAction { corrupt: ctx.corrupted.clone(), deliver: BTreeSet::new() }
    }
}

/// Probability, read off the pure state, that each site holds `value`.
/// Sites whose register does not exist yet get 0.
fn site_probs(state: &SparseState, sites: &[SiteRef], value: impl Fn(usize) -> u16) -> Vec<f64> {
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| match state.layout().get(&s.register) {
            Ok(r) if s.site < r.sites => {
                let m = state.marginal(&[r.offset + s.site]);
                m.get(&vec![value(i)]).copied().unwrap_or(0.0)
            }
            _ => 0.0,
        })
        .collect()
}

fn argmax(xs: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if allowed(i) && best.map(|b| x > xs[b] + 1e-12).unwrap_or(true) {
            best = Some(i);
        }
    }
    best
}

/// At `round`, crashes the player most likely to hold the largest leader
/// value (ties to the lower id) and drops all its in-flight messages.
#[derive(Debug, Clone)]
pub struct MaxLeaderCrash {
    pub round: usize,
    /// Leader-value site of every player.
    pub leaders: Vec<SiteRef>,
}

impl MaxLeaderCrash {
    /// Probability that player `i` wins the leader election, from the state.
    pub fn win_probabilities(&self, state: &SparseState) -> Vec<f64> {
        let n = self.leaders.len();
        let mut sites = Vec::new();
        for s in &self.leaders {
            match state.layout().get(&s.register) {
                Ok(r) => sites.push(r.offset + s.site),
                Err(_) => return vec![0.0; n],
            }
        }
        let mut win = vec![0.0; n];
        for (vals, p) in state.marginal(&sites) {
            let max = *vals.iter().max().unwrap();
            let w = vals.iter().position(|&v| v == max).unwrap();
            win[w] += p;
        }
        win
    }
}

impl FailStopPolicy for MaxLeaderCrash {
    fn name(&self) -> String {
        format!("max-leader-crash@{}", self.round)
    }
    fn act(&self, ctx: &FullInfoContext<'_>) -> FailStopAction {
        let mut corrupt = ctx.corrupted.clone();
        if ctx.round == self.round && corrupt.len() < ctx.t {
            let state = ctx.views.last().expect("history starts with the initial state");
            let win = self.win_probabilities(state);
            if let Some(i) = argmax(&win, |i| !corrupt.contains(&i)) {
                corrupt.insert(i);
            }
        }
        FailStopAction { corrupt, deliver: BTreeSet::new() }
    }
}

/// Fixed crashes: `(round, player, receivers that still get its in-flight
/// messages)`.
#[derive(Debug, Clone, Default)]
pub struct CrashSchedule {
    pub crashes: Vec<(usize, usize, Vec<usize>)>,
}

impl FailStopPolicy for CrashSchedule {
    fn name(&self) -> String {
        "crash-schedule".into()
    }
    fn act(&self, ctx: &FullInfoContext<'_>) -> FailStopAction {
        let mut corrupt = ctx.corrupted.clone();
        let mut deliver = BTreeSet::new();
        for (round, player, to) in &self.crashes {
            if *round == ctx.round && !corrupt.contains(player) && corrupt.len() < ctx.t {
                corrupt.insert(*player);
                for &j in to {
                    if ctx.in_flight.contains(&(*player, j)) {
                        deliver.insert((*player, j));
                    }
                }
            }
        }
        FailStopAction { corrupt, deliver }
    }
}

/// Draws `r_A` in `{0, 1}`. At `round` it crashes the live player whose coin
/// site is most likely to equal `r_A`, and lets that player's in-flight
/// messages reach only receivers whose id has parity `r_A`.
#[derive(Debug, Clone)]
pub struct ValueAdaptiveCrash {
    pub round: usize,
    pub coins: Vec<SiteRef>,
}

impl FailStopPolicy for ValueAdaptiveCrash {
    fn name(&self) -> String {
        format!("value-adaptive-crash@{}", self.round)
    }
    fn r_a_dist(&self) -> ClassicalDistribution {
        ClassicalDistribution::uniform(2)
    }
    fn act(&self, ctx: &FullInfoContext<'_>) -> FailStopAction {
        let mut corrupt = ctx.corrupted.clone();
        let mut deliver = BTreeSet::new();
        if ctx.round == self.round && corrupt.len() < ctx.t {
            let state = ctx.views.last().expect("history starts with the initial state");
            let probs = site_probs(state, &self.coins, |_| ctx.r_a as u16);
            if let Some(i) = argmax(&probs, |i| !corrupt.contains(&i)) {
                corrupt.insert(i);
                for &(from, to) in ctx.in_flight {
                    if from == i && (to as u64) % 2 == ctx.r_a {
                        deliver.insert((from, to));
                    }
                }
            }
        }
        FailStopAction { corrupt, deliver }
    }
}

/// Corrupts nobody.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestByzantine;

impl ByzantinePolicy for HonestByzantine {
    fn name(&self) -> String {
        "honest".into()
    }
    fn pre_ops(&self, _: &ByzantineContext<'_>) -> Vec<AdvOp> {
        Vec::new()
    }
    fn corrupt(&self, ctx: &ByzantineContext<'_>, _: &[u16]) -> (BTreeSet<usize>, Vec<AdvOp>) {
        (ctx.corrupted.clone(), Vec::new())
    }
    fn deliveries(&self, _: &ByzantineContext<'_>, _: &[u16], _: &[u16]) -> Vec<Delivery> {
        Vec::new()
    }
}

fn outgoing<'c>(ctx: &'c ByzantineContext<'_>, from: usize) -> impl Iterator<Item = &'c (usize, usize, String)> {
    ctx.in_flight.iter().filter(move |(f, _, _)| *f == from)
}

fn forward_all(ctx: &ByzantineContext<'_>) -> Vec<Delivery> {
    ctx.in_flight
        .iter()
        .filter(|(f, to, _)| ctx.corrupted.contains(f) && !ctx.corrupted.contains(to))
        .map(|(f, to, r)| Delivery { from: *f, to: *to, register: r.clone() })
        .collect()
}

/// Corrupts `target` at `round`, measures the `read` site of its first
/// in-flight message, and when `r_A = 1` adds 1 to site `flip` of every
/// in-flight message before forwarding them all.
#[derive(Debug, Clone)]
pub struct FlipAttack {
    pub target: usize,
    pub round: usize,
    pub read: usize,
    pub flip: usize,
}

impl ByzantinePolicy for FlipAttack {
    fn name(&self) -> String {
        format!("flip(p{}@{})", self.target, self.round)
    }
    fn r_a_dist(&self) -> ClassicalDistribution {
        ClassicalDistribution::uniform(2)
    }
    fn pre_ops(&self, _: &ByzantineContext<'_>) -> Vec<AdvOp> {
        Vec::new()
    }
    fn corrupt(&self, ctx: &ByzantineContext<'_>, _: &[u16]) -> (BTreeSet<usize>, Vec<AdvOp>) {
        let mut set = ctx.corrupted.clone();
        let mut ops = Vec::new();
        if ctx.round == self.round && set.len() < ctx.t {
            set.insert(self.target);
            let regs: Vec<&String> = outgoing(ctx, self.target).map(|(_, _, r)| r).collect();
            if let Some(first) = regs.first() {
                ops.push(AdvOp::Measure { targets: vec![SiteRef::new(first.as_str(), self.read)] });
            }
            if ctx.r_a == 1 {
                for r in regs {
                    ops.push(AdvOp::Shift { targets: vec![SiteRef::new(r.as_str(), self.flip)], delta: vec![1] });
                }
            }
        }
        (set, ops)
    }
    fn deliveries(&self, ctx: &ByzantineContext<'_>, _: &[u16], _: &[u16]) -> Vec<Delivery> {
        forward_all(ctx)
    }
}

/// Corrupts `target` at `round` and applies a Hadamard to `site` of its
/// in-flight message to `victim` (a qubit site) before forwarding everything.
#[derive(Debug, Clone)]
pub struct HadamardAttack {
    pub target: usize,
    pub round: usize,
    pub victim: usize,
    pub site: usize,
}

impl ByzantinePolicy for HadamardAttack {
    fn name(&self) -> String {
        format!("hadamard(p{}->p{}@{})", self.target, self.victim, self.round)
    }
    fn pre_ops(&self, _: &ByzantineContext<'_>) -> Vec<AdvOp> {
        Vec::new()
    }
    fn corrupt(&self, ctx: &ByzantineContext<'_>, _: &[u16]) -> (BTreeSet<usize>, Vec<AdvOp>) {
        let mut set = ctx.corrupted.clone();
        let mut ops = Vec::new();
        if ctx.round == self.round && set.len() < ctx.t {
            set.insert(self.target);
            for (_, to, r) in outgoing(ctx, self.target) {
                if *to == self.victim {
                    ops.push(AdvOp::Dense {
                        targets: vec![SiteRef::new(r.as_str(), self.site)],
                        matrix: gates::hadamard(),
                    });
                }
            }
        }
        (set, ops)
    }
    fn deliveries(&self, ctx: &ByzantineContext<'_>, _: &[u16], _: &[u16]) -> Vec<Delivery> {
        forward_all(ctx)
    }
}
