use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One classical event of an execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Event {
    /// Start of synchronous round `k` (1-based).
    Round(usize),
    /// Asynchronous step: `player` receives one message from `from` (`None`
    /// for its input). `depth` is the causal depth of the step.
    Step { player: usize, from: Option<usize>, depth: usize },
    /// Adversary outcome `a_k` (before corrupting).
    Adv(Vec<u16>),
    /// Adversary outcome `a'_k` (after corrupting).
    AdvPrime(Vec<u16>),
    /// Measured `D` of an honest player; `None` is undecided.
    Decision { player: usize, d: Option<bool> },
    /// Measured `B` of an honest, undecided player.
    Pattern { player: usize, b: Vec<u8> },
}

/// `r_A` followed by the classical events in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub r_a: u64,
    pub events: Vec<Event>,
}

/// Per-round view of a synchronous trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTuple {
    pub a: Vec<u16>,
    pub a_prime: Vec<u16>,
    /// `b[i][j]`; rows of players that did not send are zero.
    pub b: Vec<Vec<u8>>,
    /// `"0"`, `"1"`, `"_"` (undecided) or `"-"` (did not act).
    pub d: Vec<String>,
}

impl ExecutionTrace {
    pub fn new(r_a: u64) -> Self {
        Self { r_a, events: Vec::new() }
    }

    pub fn is_prefix_of(&self, other: &ExecutionTrace) -> bool {
        self.r_a == other.r_a
            && self.events.len() <= other.events.len()
            && self.events.iter().zip(&other.events).all(|(a, b)| a == b)
    }

    /// Prefix ending just before the start of round `k` (sync traces).
    pub fn before_round(&self, k: usize) -> ExecutionTrace {
        let end = self.events.iter().position(|e| *e == Event::Round(k)).unwrap_or(self.events.len());
        ExecutionTrace { r_a: self.r_a, events: self.events[..end].to_vec() }
    }

    /// Last decision of every player that has one.
    pub fn decisions(&self) -> BTreeMap<usize, bool> {
        let mut out = BTreeMap::new();
        for e in &self.events {
            if let Event::Decision { player, d: Some(v) } = e {
                out.insert(*player, *v);
            }
        }
        out
    }

    /// Per-round tuples `(a_k, a'_k, b_k, d_k)` of a synchronous trace.
    pub fn rounds(&self, n: usize) -> Vec<RoundTuple> {
        let mut out: Vec<RoundTuple> = Vec::new();
        for e in &self.events {
            match e {
                Event::Round(_) => out.push(RoundTuple {
                    a: Vec::new(),
                    a_prime: Vec::new(),
                    b: vec![vec![0; n]; n],
                    d: vec!["-".to_string(); n],
                }),
                Event::Adv(a) => {
                    if let Some(r) = out.last_mut() {
                        r.a.extend(a)
                    }
                }
                Event::AdvPrime(a) => {
                    if let Some(r) = out.last_mut() {
                        r.a_prime.extend(a)
                    }
                }
                Event::Decision { player, d } => {
                    if let Some(r) = out.last_mut() {
                        r.d[*player] = match d {
                            Some(true) => "1".into(),
                            Some(false) => "0".into(),
                            None => "_".into(),
                        };
                    }
                }
                Event::Pattern { player, b } => {
                    if let Some(r) = out.last_mut() {
                        r.b[*player] = b.clone();
                    }
                }
                Event::Step { .. } => {}
            }
        }
        out
    }

    /// Number of messages sent by honest players, `sum_k sum_{i good, j} b_k^{(i,j)}`.
    pub fn message_count(&self) -> usize {
        self.events
            .iter()
            .map(|e| match e {
                Event::Pattern { b, .. } => b.iter().map(|&x| x as usize).sum(),
                _ => 0,
            })
            .sum()
    }

    /// Synchronous: number of rounds. Asynchronous: longest causal chain of
    /// unit-delay messages.
    pub fn round_count(&self) -> usize {
        let sync = self.events.iter().filter(|e| matches!(e, Event::Round(_))).count();
        let depth = self
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Step { depth, .. } => Some(*depth),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        sync.max(depth)
    }

    /// Compact single-line rendering with stable field order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            if !s.is_empty() {
                s.push(' ');
            }
            match e {
                Event::Round(k) => write!(s, "R{k}").unwrap(),
                Event::Step { player, from, depth } => match from {
                    Some(f) => write!(s, "S{player}<{f}@{depth}").unwrap(),
                    None => write!(s, "S{player}<in@{depth}").unwrap(),
                },
                Event::Adv(a) => write!(s, "a{a:?}").unwrap(),
                Event::AdvPrime(a) => write!(s, "a'{a:?}").unwrap(),
                Event::Decision { player, d } => match d {
                    Some(v) => write!(s, "d{player}={}", u8::from(*v)).unwrap(),
                    None => write!(s, "d{player}=_").unwrap(),
                },
                Event::Pattern { player, b } => {
                    let bits: String = b.iter().map(|x| if *x == 1 { '1' } else { '0' }).collect();
                    write!(s, "b{player}={bits}").unwrap()
                }
            }
        }
        s
    }
}

/// Probability of every execution trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceDistribution {
    pub probs: BTreeMap<ExecutionTrace, f64>,
    /// Mass dropped by the enumeration cutoff.
    pub pruned_mass: f64,
}

impl TraceDistribution {
    pub fn add(&mut self, trace: ExecutionTrace, p: f64) {
        *self.probs.entry(trace).or_insert(0.0) += p;
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, t: &ExecutionTrace) -> f64 {
        self.probs.get(t).copied().unwrap_or(0.0)
    }

    /// Total probability of traces satisfying `pred`.
    pub fn mass(&self, pred: impl Fn(&ExecutionTrace) -> bool) -> f64 {
        self.probs.iter().filter(|(t, _)| pred(t)).map(|(_, p)| p).sum()
    }

    /// Probability that `prefix` is a prefix of the trace.
    pub fn prefix_mass(&self, prefix: &ExecutionTrace) -> f64 {
        self.mass(|t| prefix.is_prefix_of(t))
    }

    /// Total-variation distance.
    pub fn tv_distance(&self, other: &TraceDistribution) -> f64 {
        let keys: std::collections::BTreeSet<&ExecutionTrace> = self.probs.keys().chain(other.probs.keys()).collect();
        0.5 * keys.into_iter().map(|k| (self.prob(k) - other.prob(k)).abs()).sum::<f64>()
    }

    /// Line-delimited records: `r_A`, event list, probability.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (t, p) in &self.probs {
            writeln!(out, "{}", trace_line(t, *p)).unwrap();
        }
        out
    }
}

/// One trace record: `{"r_a":..,"events":"..","p":..}` with fixed field order.
pub fn trace_line(t: &ExecutionTrace, p: f64) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        r_a: u64,
        events: &'a str,
        rounds: usize,
        messages: usize,
        p: f64,
    }
    let events = t.render();
    serde_json::to_string(&Line { r_a: t.r_a, events: &events, rounds: t.round_count(), messages: t.message_count(), p })
        .expect("trace serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_counts() {
        let t = ExecutionTrace::new(0);
        assert_eq!((t.round_count(), t.message_count()), (0, 0));
    }

    #[test]
    fn two_round_multicast_counts_eighteen() {
        let mut t = ExecutionTrace::new(0);
        for k in 1..=2 {
            t.events.push(Event::Round(k));
            for i in 0..3 {
                t.events.push(Event::Decision { player: i, d: None });
                t.events.push(Event::Pattern { player: i, b: vec![1, 1, 1] });
            }
        }
        assert_eq!(t.message_count(), 18);
        assert_eq!(t.round_count(), 2);
        assert_eq!(t.rounds(3)[1].d, vec!["_", "_", "_"]);
    }

    #[test]
    fn tv_of_identical_is_zero() {
        let mut a = TraceDistribution::default();
        a.add(ExecutionTrace::new(0), 0.5);
        a.add(ExecutionTrace::new(1), 0.5);
        assert_eq!(a.tv_distance(&a.clone()), 0.0);
        let mut b = TraceDistribution::default();
        b.add(ExecutionTrace::new(0), 1.0);
        assert!((a.tv_distance(&b) - 0.5).abs() < 1e-15);
    }
}
