use std::collections::{BTreeSet, HashSet};

use qba::normalform::quantize;
use qba::protocols::{check_core_property, classical_common_coin, core_set_game, QuantumCoin};
use qba::qstate::ClassicalDistribution;
use qba::sched::{AsyncEngine, Event, Fifo, RunMode};

fn all_output(decisions: &[Event], n: usize, value: bool) -> bool {
    let mut seen = BTreeSet::new();
    for e in decisions {
        if let Event::Decision { player, d: Some(d) } = e {
            if *d != value {
                return false;
            }
            seen.insert(*player);
        }
    }
    seen.len() == n
}

#[test]
fn unattacked_coin_is_one_with_all_coins_one() {
    let n = 4;
    let r = QuantumCoin::new(n, 1).run(&BTreeSet::new(), &Fifo, RunMode::exact()).unwrap();
    let p1 = r.distribution.mass(|t| all_output(&t.events, n, true));
    // FIFO delivers everything, so each player ANDs all n coins.
    let expected = (1.0 - 1.0 / n as f64).powi(n as i32);
    assert!((p1 - 81.0 / 256.0).abs() < 1e-12 && (p1 - expected).abs() < 1e-12, "{p1}");
    assert!(p1 >= 0.25);
    assert!((r.distribution.total() - 1.0).abs() < 1e-9);
}

/// Classical evaluation of the same adaptive game over explicit coin
/// assignments: the adversary learns only whether each chosen set held a 0.
fn game_oracle(n: usize, m: usize, need: usize) -> f64 {
    let weight = |a: u32| -> f64 {
        (0..n).map(|j| if a >> j & 1 == 0 { 1.0 / n as f64 } else { 1.0 - 1.0 / n as f64 }).product()
    };
    fn go(n: usize, left: usize, need: usize, inter: u32, worlds: &[(u32, f64)]) -> f64 {
        let total: f64 = worlds.iter().map(|w| w.1).sum();
        if left == 0 || total == 0.0 {
            return total;
        }
        let mut best = f64::INFINITY;
        for v in 1u32..(1 << n) {
            if ((inter & v).count_ones() as usize) < need {
                continue;
            }
            // Worlds where `v` holds a zero coin.
            let keep: Vec<(u32, f64)> = worlds.iter().copied().filter(|(a, _)| a & v != v).collect();
            best = best.min(go(n, left - 1, need, inter & v, &keep));
        }
        best
    }
    let worlds: Vec<(u32, f64)> = (0u32..(1 << n)).map(|a| (a, weight(a))).collect();
    go(n, m, need, (1 << n) - 1, &worlds)
}

#[test]
fn core_set_game_matches_classical_oracle() {
    for (n, t) in [(3, 1), (4, 1), (5, 2)] {
        let bias = ClassicalDistribution::bernoulli_zero(1.0 / n as f64).unwrap();
        let g = core_set_game(n, t, &bias).unwrap();
        let oracle = game_oracle(n, n - t, n.div_ceil(2));
        assert!((g.min_all_zero - oracle).abs() < 1e-12, "n={n}: {} vs {oracle}", g.min_all_zero);
        assert!(g.min_all_zero >= 1.0 - (-0.5f64).exp());
    }
    let g = core_set_game(4, 1, &ClassicalDistribution::bernoulli_zero(0.25).unwrap()).unwrap();
    assert!((g.min_all_zero - 7.0 / 16.0).abs() < 1e-12);
}

#[test]
fn quantized_coin_matches_hand_written_coin() {
    let q = quantize(classical_common_coin(3, 1)).unwrap();
    let compiled = AsyncEngine::new(&q, vec![0; 3], &Fifo).run(RunMode::exact()).unwrap();
    let bespoke = QuantumCoin::new(3, 1).stop_on_return(true).run(&BTreeSet::new(), &Fifo, RunMode::exact()).unwrap();
    let tv = compiled.distribution.tv_distance(&bespoke.distribution);
    assert!(tv <= 1e-9, "tv={tv}");
    assert!(compiled.distribution.len() > 1);
}

/// Message-by-message exploration of get-core. The only reductions are
/// exact-state dedup and forgetting what a player past every threshold
/// would receive. Returns (violations, smallest core, core sizes).
fn naive_core(n: usize, t: usize) -> (usize, usize, BTreeSet<usize>) {
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct St {
        s: Vec<[u16; 3]>,
        known: Vec<u16>,
        ret: Vec<Option<u16>>,
        pending: BTreeSet<(usize, usize, usize, u16)>,
    }
    // Bit-packed copy of a state, small enough to keep millions of.
    fn key(st: &St, n: usize) -> (u64, u128) {
        let low = |m: u16| (m & 7) as u64;
        let mut a = 0u64;
        for i in 0..n {
            for ph in 0..3 {
                a = a << 3 | low(st.s[i][ph]);
            }
            a = a << 3 | low(st.known[i]);
            a = a << 4 | st.ret[i].map_or(0, |r| 8 | low(r));
        }
        let mut b = 0u128;
        for &(f, to, ph, mask) in &st.pending {
            b |= (8 | (mask & 7) as u128) << (4 * ((f * n + to) * 3 + ph));
        }
        (a, b)
    }
    fn unkey(k: (u64, u128), n: usize) -> St {
        let mut st = St { s: vec![[0; 3]; n], known: vec![0; n], ret: vec![None; n], pending: BTreeSet::new() };
        let mut a = k.0;
        for i in (0..n).rev() {
            let r = (a & 15) as u16;
            st.ret[i] = (r & 8 != 0).then_some(r & 7);
            st.known[i] = (a >> 4 & 7) as u16;
            a >>= 7;
            for ph in (0..3).rev() {
                let v = (a & 7) as u16;
                // Seven senders-bits only arise past the threshold.
                st.s[i][ph] = if v == 7 { u16::MAX } else { v };
                a >>= 3;
            }
        }
        for f in 0..n {
            for to in 0..n {
                for ph in 0..3 {
                    let v = (k.1 >> (4 * ((f * n + to) * 3 + ph))) as u16 & 15;
                    if v & 8 != 0 {
                        st.pending.insert((f, to, ph, v & 7));
                    }
                }
            }
        }
        st
    }
    assert!(n == 3 && t == 1, "packed key holds three players");
    let mut out = (0, n, BTreeSet::new());
    for k in 0..=t {
        let faulty: u16 = (1 << k) - 1;
        let mut st = St { s: vec![[0; 3]; n], known: (0..n).map(|i| 1 << i).collect(), ret: vec![None; n], pending: BTreeSet::new() };
        for i in 0..n {
            for j in 0..n {
                st.pending.insert((i, j, 0, 1 << i));
            }
        }
        let mut seen = HashSet::new();
        let mut stack = vec![key(&st, n)];
        seen.insert(key(&st, n));
        while let Some(k) = stack.pop() {
            let st = unkey(k, n);
            let good = |i: usize| faulty >> i & 1 == 0;
            if !st.pending.iter().any(|&(f, to, _, _)| good(f) && good(to)) {
                let returned: Vec<Option<u16>> = (0..n).filter(|&i| good(i)).map(|i| st.ret[i]).collect();
                if returned.iter().any(|r| r.is_none()) {
                    out.0 += 1;
                    continue;
                }
                let core = returned.iter().fold(u16::MAX, |a, r| a & r.unwrap()).count_ones() as usize;
                out.1 = out.1.min(core);
                out.2.insert(core);
                if core < n - t {
                    out.0 += 1;
                }
            }
            for &msg in &st.pending {
                let (from, to, ph, mask) = msg;
                let mut c = st.clone();
                c.pending.remove(&msg);
                let before = c.s[to][ph].count_ones() as usize;
                c.s[to][ph] |= 1 << from;
                c.known[to] |= mask;
                if before + 1 == n - t && c.s[to][ph].count_ones() as usize == n - t {
                    if ph < 2 {
                        for j in 0..n {
                            c.pending.insert((to, j, ph + 1, c.known[to]));
                        }
                    } else {
                        c.ret[to] = Some(c.known[to]);
                    }
                    if c.s[to].iter().all(|x| x.count_ones() as usize >= n - t) {
                        c.pending.retain(|m| m.1 != to);
                        c.s[to] = [u16::MAX; 3];
                    }
                } else if c.s[to][ph].count_ones() as usize > n - t {
                    // Past the threshold, only `known` still matters.
                    c.s[to][ph] = u16::MAX;
                }
                let k = key(&c, n);
                if seen.insert(k) {
                    stack.push(k);
                }
            }
        }
    }
    out
}

#[test]
fn core_checker_agrees_with_naive_search_at_three() {
    let r = check_core_property(3, 1);
    let (violations, min_core, sizes) = naive_core(3, 1);
    assert_eq!(r.violations, violations);
    assert_eq!(r.min_core, min_core);
    assert_eq!(r.core_sizes, sizes);
    assert_eq!(r.violations, 0);
}

#[test]
fn core_property_holds_at_four() {
    let t0 = std::time::Instant::now();
    let r = check_core_property(4, 1);
    assert_eq!(r.violations, 0);
    assert!(r.min_core >= 3);
    assert!(t0.elapsed().as_secs() < 60);
}
