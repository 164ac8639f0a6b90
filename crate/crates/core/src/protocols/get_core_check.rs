//! Exhaustive check of the get-core core-set property over every delivery
//! order and every crash pattern of up to `t` players.
//!
//! Player state only ever grows by unions, and a player acts only when one
//! of its three phase counters reaches `n - t`. So a delivery can be
//! postponed until just before the receiver's next threshold crossing
//! without changing anything anyone sends. The search therefore moves in
//! batches: pick a player, a phase it has not crossed yet, and any set of
//! pending messages that makes exactly that phase cross.
//!
//! A crashed player is a player in a fixed faulty set `F` that the
//! adversary simply stops serving: messages to it and from it may stay
//! pending forever. A state ends an admissible run when delivering every
//! pending message between good players crosses no further threshold.

use std::collections::{BTreeSet, HashSet};

const PRESENT: u16 = 1 << 15;

/// Flat encoding so that relabelling and hashing stay cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Node {
    /// Per player: `[crossed bits | returned flag << 3, known, returned mask, s0, s1, s2]`.
    players: Vec<[u16; 6]>,
    /// `pending[(from * n + to) * 3 + phase]`: `PRESENT | mask`, or 0.
    pending: Vec<u16>,
}

impl Node {
    fn crossed(&self, p: usize, ph: usize) -> bool {
        self.players[p][0] >> ph & 1 == 1
    }
    fn returned(&self, p: usize) -> Option<u16> {
        (self.players[p][0] & 8 != 0).then_some(self.players[p][2])
    }
}

#[derive(Debug, Clone, Default)]
pub struct CoreCheckReport {
    pub n: usize,
    pub t: usize,
    /// Faulty sets explored.
    pub faulty_sets: usize,
    pub states: usize,
    /// Admissible end states checked.
    pub terminals: usize,
    pub violations: usize,
    /// End states where some good player never returned.
    pub stuck: usize,
    pub min_core: usize,
    /// Core sizes seen at end states.
    pub core_sizes: BTreeSet<usize>,
}

/// Explores every admissible execution of get-core at `(n, t)` for every
/// faulty set of size at most `t`, up to relabelling of players.
pub fn check_core_property(n: usize, t: usize) -> CoreCheckReport {
    assert!((1..=12).contains(&n) && t < n);
    let mut report = CoreCheckReport { n, t, min_core: n, ..Default::default() };
    // Players are interchangeable, so one faulty set per size suffices.
    for k in 0..=t {
        let faulty: u16 = (1 << k) - 1;
        report.faulty_sets += 1;
        explore(n, t, faulty, &mut report);
    }
    report
}

fn explore(n: usize, t: usize, faulty: u16, report: &mut CoreCheckReport) {
    let mut start = Node { players: vec![[0; 6]; n], pending: vec![0; n * n * 3] };
    for i in 0..n {
        start.players[i][1] = 1 << i;
        multicast(&mut start, n, i, 0, 1 << i);
    }
    let perms = stabilizer(n, faulty);
    let start = symmetric_canonical(canonical(start, n), &perms);
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut stack = vec![start];
    let mut local = HashSet::new();
    while let Some(node) = stack.pop() {
        report.states += 1;
        if report.states.is_multiple_of(1_000_000) {
            eprintln!("get-core: {} states", report.states);
        }
        if is_end(&node, n, t, faulty) {
            check_end(&node, n, faulty, report);
        }
        local.clear();
        for p in 0..n {
            // (slot, from, phase, mask) of every message waiting for `p`.
            let inbox: Vec<(usize, usize, usize, u16)> = (0..n)
                .flat_map(|from| (0..3).map(move |ph| (from, ph)))
                .filter_map(|(from, ph)| {
                    let slot = (from * n + p) * 3 + ph;
                    let v = node.pending[slot];
                    (v & PRESENT != 0).then_some((slot, from, ph, v & !PRESENT))
                })
                .collect();
            assert!(inbox.len() <= 32, "inbox too large for subset enumeration");
            for phase in 0..3 {
                if node.crossed(p, phase) {
                    continue;
                }
                for subset in batches(&node, n, t, p, phase, &inbox) {
                    if let Some(c) = batch(&node, n, t, p, phase, &inbox, subset) {
                        let c = canonical(c, n);
                        if local.insert(c.clone()) {
                            let c = symmetric_canonical(c, &perms);
                            if seen.insert(c.clone()) {
                                stack.push(c);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Submasks of `mask`, including 0.
fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

/// Candidate batches for `p` crossing `phase`: exactly enough new senders
/// of that phase, too few of every other open phase, anything of crossed
/// phases.
fn batches(node: &Node, n: usize, t: usize, p: usize, phase: usize, inbox: &[(usize, usize, usize, u16)]) -> Vec<u32> {
    let mut groups = [0u32; 3];
    for (idx, &(_, _, ph, _)) in inbox.iter().enumerate() {
        groups[ph] |= 1 << idx;
    }
    let need = |ph: usize| (n - t).saturating_sub(node.players[p][3 + ph].count_ones() as usize);
    let mut parts: Vec<Vec<u32>> = Vec::new();
    for ph in 0..3 {
        let g = groups[ph];
        let opts: Vec<u32> = if node.crossed(p, ph) {
            submasks(g).collect()
        } else if ph == phase {
            submasks(g).filter(|m| m.count_ones() as usize == need(ph)).collect()
        } else {
            submasks(g).filter(|m| (m.count_ones() as usize) < need(ph)).collect()
        };
        parts.push(opts);
    }
    let mut out = Vec::new();
    for a in &parts[0] {
        for b in &parts[1] {
            for c in &parts[2] {
                out.push(a | b | c);
            }
        }
    }
    out
}

/// Delivers the messages of `subset` to `p` so that exactly `phase`
/// crosses its threshold with the last of them; `None` if that is not what
/// the batch does.
fn batch(
    node: &Node,
    n: usize,
    t: usize,
    p: usize,
    phase: usize,
    inbox: &[(usize, usize, usize, u16)],
    subset: u32,
) -> Option<Node> {
    let mut row = node.players[p];
    let mut trigger = false;
    for (idx, &(_, from, ph, mask)) in inbox.iter().enumerate() {
        if subset >> idx & 1 == 1 {
            row[3 + ph] |= 1 << from;
            row[1] |= mask;
            trigger |= ph == phase;
        }
    }
    if !trigger {
        return None;
    }
    for ph in 0..3 {
        if node.crossed(p, ph) {
            continue;
        }
        let count = row[3 + ph].count_ones() as usize;
        let ok = if ph == phase { count == n - t } else { count < n - t };
        if !ok {
            return None;
        }
    }
    let mut c = node.clone();
    for (idx, &(slot, ..)) in inbox.iter().enumerate() {
        if subset >> idx & 1 == 1 {
            c.pending[slot] = 0;
        }
    }
    row[0] |= 1 << phase;
    let known = row[1];
    if phase == 2 {
        row[0] |= 8;
        row[2] = known;
    }
    c.players[p] = row;
    if phase < 2 {
        multicast(&mut c, n, p, phase + 1, known);
    }
    Some(c)
}

/// Whether flushing all good-to-good messages would cross no threshold.
fn is_end(node: &Node, n: usize, t: usize, faulty: u16) -> bool {
    for p in 0..n {
        if faulty >> p & 1 == 1 {
            continue;
        }
        for ph in 0..3 {
            if node.crossed(p, ph) {
                continue;
            }
            let mut s = node.players[p][3 + ph];
            for from in 0..n {
                if faulty >> from & 1 == 0 && node.pending[(from * n + p) * 3 + ph] & PRESENT != 0 {
                    s |= 1 << from;
                }
            }
            if s.count_ones() as usize >= n - t {
                return false;
            }
        }
    }
    true
}

fn check_end(node: &Node, n: usize, faulty: u16, report: &mut CoreCheckReport) {
    report.terminals += 1;
    let good: Vec<usize> = (0..n).filter(|i| faulty >> i & 1 == 0).collect();
    if good.iter().any(|&i| node.returned(i).is_none()) {
        report.stuck += 1;
        report.violations += 1;
        return;
    }
    let core = good.iter().fold(u16::MAX, |acc, &i| acc & node.returned(i).unwrap_or(0));
    let size = core.count_ones() as usize;
    report.min_core = report.min_core.min(size);
    if size < n - report.t {
        report.violations += 1;
    }
    report.core_sizes.insert(size);
}

/// Drops what can no longer matter: messages that neither advance an open
/// phase nor teach the receiver anything, and all state of players that
/// have crossed every threshold.
fn canonical(mut node: Node, n: usize) -> Node {
    let full = (1u16 << n) - 1;
    for row in node.players.iter_mut() {
        for ph in 0..3 {
            if row[0] >> ph & 1 == 1 {
                row[3 + ph] = 0;
            }
        }
        if row[0] & 7 == 7 {
            row[1] = full;
        }
    }
    for from in 0..n {
        for to in 0..n {
            let row = node.players[to];
            for ph in 0..3 {
                let slot = (from * n + to) * 3 + ph;
                let v = node.pending[slot];
                if v & PRESENT == 0 {
                    continue;
                }
                // Bits the receiver already knows never matter again.
                let mask = v & !PRESENT & !row[1];
                node.pending[slot] = if row[0] >> ph & 1 == 1 && mask == 0 { 0 } else { PRESENT | mask };
            }
        }
    }
    node
}

fn map_mask(m: u16, perm: &[usize]) -> u16 {
    let mut out = 0;
    for (i, &j) in perm.iter().enumerate() {
        out |= (m >> i & 1) << j;
    }
    out
}

/// `node` with player `i` renamed to `perm[i]`.
fn relabel(node: &Node, perm: &[usize], out: &mut Node) {
    let n = perm.len();
    for i in 0..n {
        let r = node.players[i];
        let mut o = [r[0], 0, 0, 0, 0, 0];
        for k in 1..6 {
            o[k] = map_mask(r[k], perm);
        }
        out.players[perm[i]] = o;
    }
    for from in 0..n {
        for to in 0..n {
            for ph in 0..3 {
                let v = node.pending[(from * n + to) * 3 + ph];
                let w = if v & PRESENT == 0 { 0 } else { PRESENT | map_mask(v & !PRESENT, perm) };
                out.pending[(perm[from] * n + perm[to]) * 3 + ph] = w;
            }
        }
    }
}

/// Smallest relabelling under the permutations that fix the faulty set.
fn symmetric_canonical(node: Node, perms: &[Vec<usize>]) -> Node {
    let mut best = node.clone();
    let mut scratch = node.clone();
    for perm in perms {
        relabel(&node, perm, &mut scratch);
        if scratch < best {
            std::mem::swap(&mut best, &mut scratch);
        }
    }
    best
}

/// Permutations of `0..n` mapping the faulty set onto itself.
fn stabilizer(n: usize, faulty: u16) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        if (0..n).all(|i| (faulty >> i & 1) == (faulty >> p[i] & 1)) {
            out.push(p.to_vec());
        }
    });
    out
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn multicast(node: &mut Node, n: usize, from: usize, phase: usize, mask: u16) {
    for j in 0..n {
        node.pending[(from * n + j) * 3 + phase] = PRESENT | mask;
    }
}
