//! Bracha reliable broadcast: init, echo, ready.
//!
//! A player echoes the first init it gets from the sender, sends ready
//! after `n - t` matching echoes or `t + 1` matching readys, and delivers
//! after `n - t` matching readys. The agreement guarantees need `3t < n`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BrachaMsg {
    Init(u32),
    Echo(u32),
    Ready(u32),
}

/// What a faulty sender does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SenderBehavior {
    Honest(u32),
    /// Sends `Init(values[j])` to player `j`, then echoes and readies that
    /// same per-recipient value.
    Equivocate(Vec<u32>),
    Silent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrachaOutcome {
    /// Delivered value per player; faulty players are `None`.
    pub delivered: Vec<Option<u32>>,
    /// Whether `3t < n`, i.e. whether agreement is guaranteed at all.
    pub guarantees: bool,
    pub messages: usize,
}

impl BrachaOutcome {
    /// Good players that delivered agree, and all of them delivered if any did.
    pub fn consistent(&self, faulty: &BTreeSet<usize>) -> bool {
        let good: Vec<Option<u32>> =
            (0..self.delivered.len()).filter(|i| !faulty.contains(i)).map(|i| self.delivered[i]).collect();
        let values: BTreeSet<u32> = good.iter().flatten().copied().collect();
        values.len() <= 1 && (values.is_empty() || good.iter().all(|d| d.is_some()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Bracha {
    pub n: usize,
    pub t: usize,
}

#[derive(Default, Clone)]
struct Local {
    echoed: bool,
    readied: bool,
    delivered: Option<u32>,
    echoes: BTreeMap<u32, BTreeSet<usize>>,
    readys: BTreeMap<u32, BTreeSet<usize>>,
}

impl Bracha {
    pub fn new(n: usize, t: usize) -> Self {
        assert!(t < n, "need t < n");
        Self { n, t }
    }

    pub fn guarantees_hold(&self) -> bool {
        3 * self.t < self.n
    }

    /// One run with a uniformly random delivery order drawn from `rng`.
    /// Faulty players other than the sender stay silent; messages to them
    /// are dropped.
    pub fn run<R: Rng + ?Sized>(
        &self,
        sender: usize,
        behavior: &SenderBehavior,
        faulty: &BTreeSet<usize>,
        rng: &mut R,
    ) -> BrachaOutcome {
        let n = self.n;
        let mut pending: Vec<(usize, usize, BrachaMsg)> = Vec::new();
        let mut sent = 0;
        let mut local = vec![Local::default(); n];
        let byz_sender = faulty.contains(&sender);
        let per: Vec<u32> = match behavior {
            SenderBehavior::Honest(v) => vec![*v; n],
            SenderBehavior::Equivocate(vals) => vals.clone(),
            SenderBehavior::Silent => Vec::new(),
        };
        for (j, &v) in per.iter().enumerate() {
            pending.push((sender, j, BrachaMsg::Init(v)));
            // A faulty sender also pushes its own echo and ready.
            if byz_sender {
                pending.extend([BrachaMsg::Echo(v), BrachaMsg::Ready(v)].map(|m| (sender, j, m)));
            }
        }
        while !pending.is_empty() {
            let (from, to, msg) = pending.swap_remove(rng.gen_range(0..pending.len()));
            sent += 1;
            if faulty.contains(&to) {
                continue;
            }
            let st = &mut local[to];
            let mut out = Vec::new();
            match msg {
                BrachaMsg::Init(v) if from == sender && !st.echoed => {
                    st.echoed = true;
                    out.push(BrachaMsg::Echo(v));
                }
                BrachaMsg::Init(_) => {}
                BrachaMsg::Echo(v) => {
                    st.echoes.entry(v).or_default().insert(from);
                }
                BrachaMsg::Ready(v) => {
                    st.readys.entry(v).or_default().insert(from);
                }
            }
            if !st.readied {
                let by_echo = st.echoes.iter().find(|(_, s)| s.len() >= n - self.t).map(|(v, _)| *v);
                let by_ready = st.readys.iter().find(|(_, s)| s.len() > self.t).map(|(v, _)| *v);
                if let Some(v) = by_echo.or(by_ready) {
                    st.readied = true;
                    out.push(BrachaMsg::Ready(v));
                }
            }
            if st.delivered.is_none() {
                st.delivered = st.readys.iter().find(|(_, s)| s.len() >= n - self.t).map(|(v, _)| *v);
            }
            for m in out {
                for j in 0..n {
                    pending.push((to, j, m));
                }
            }
        }
        let delivered = (0..n).map(|i| if faulty.contains(&i) { None } else { local[i].delivered }).collect();
        BrachaOutcome { delivered, guarantees: self.guarantees_hold(), messages: sent }
    }
}
