//! Quantum shunning verifiable secret sharing of a uniformly random field
//! element.
//!
//! The dealer prepares the uniform superposition over symmetric bivariate
//! polynomials `f` of degree at most `t` and hands player `i` the register
//! holding `f(x, i)`. Players evaluate their share at every point, swap
//! CX-copies of the evaluations pairwise and measure the difference: a zero
//! means `f_i(j) = f_j(i)` and is broadcast as "player j is ok".
//!
//! Verification sets use a simplified rule. The dealer announces `V`, the
//! lexicographically first `n - t` players whose ok edges form a complete
//! graph. In reconstruction, player `i` trusts the broadcast shares of the
//! players in `V` that agree with its own share at the crossing point and
//! clash with at most `t` other broadcasts. It shuns everyone whose
//! broadcast disagrees with its own share.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bracha::{Bracha, SenderBehavior};
use super::field::PrimeField;
use crate::qstate::{ClassicalDistribution, FunctionAdd, RegisterLayout, SparseState, StateError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SavssError {
    #[error("field size {p} must be a prime larger than n = {n}")]
    FieldTooSmall { p: u32, n: usize },
    #[error("need t < n")]
    BadThreshold,
    #[error("dealer support {0} exceeds the budget")]
    SupportTooLarge(u64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Largest dealer superposition the share phase will build.
pub const SUPPORT_BUDGET: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SavssParams {
    pub n: usize,
    pub t: usize,
    pub p: u32,
}

impl SavssParams {
    pub fn new(n: usize, t: usize, p: u32) -> Result<Self, SavssError> {
        if PrimeField::new(p).is_none() || p as usize <= n {
            return Err(SavssError::FieldTooSmall { p, n });
        }
        if t >= n {
            return Err(SavssError::BadThreshold);
        }
        Ok(Self { n, t, p })
    }

    fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("checked prime")
    }

    /// Number of free coefficients of a symmetric polynomial.
    pub fn coefficient_count(&self) -> usize {
        (self.t + 1) * (self.t + 2) / 2
    }

    /// Evaluation point of player `i`.
    pub fn point(&self, i: usize) -> u32 {
        i as u32 + 1
    }

    /// Coefficient pairs `(u, v)` with `u <= v`, in register order.
    fn pairs(&self) -> Vec<(usize, usize)> {
        (0..=self.t).flat_map(|u| (u..=self.t).map(move |v| (u, v))).collect()
    }
}

/// Symmetric bivariate polynomial over `F_p` from its upper-triangle
/// coefficients (`(0,0), (0,1), .., (t,t)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricBivariate {
    pub params: SavssParams,
    pub coeffs: Vec<u32>,
}

impl SymmetricBivariate {
    /// Full coefficient matrix `c[u][v]` of `x^u y^v`.
    pub fn matrix(&self) -> Vec<Vec<u32>> {
        let t = self.params.t;
        let mut m = vec![vec![0; t + 1]; t + 1];
        for (&c, (u, v)) in self.coeffs.iter().zip(self.params.pairs()) {
            m[u][v] = c;
            m[v][u] = c;
        }
        m
    }

    pub fn eval(&self, x: u32, y: u32) -> u32 {
        let f = self.params.field();
        let m = self.matrix();
        let rows: Vec<u32> = m.iter().map(|row| f.eval(row, y)).collect();
        f.eval(&rows, x)
    }

    /// Coefficients of `x -> f(x, y)`.
    pub fn share(&self, y: u32) -> Vec<u32> {
        let f = self.params.field();
        self.matrix().iter().map(|row| f.eval(row, y)).collect()
    }
}

/// What the dealer does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DealerBehavior {
    Honest,
    /// Adds the (asymmetric) polynomial `h[u][v] x^u y^v` to every share.
    Asymmetric(Vec<Vec<u32>>),
}

/// One outcome of the share phase.
#[derive(Debug, Clone)]
pub struct ShareBranch {
    pub probability: f64,
    pub state: SparseState,
    /// `(i, j)`: player `i` broadcast "player `j` is ok".
    pub ok: BTreeSet<(usize, usize)>,
    /// Measured difference at player `i` for the copy from `j`.
    pub r_outcomes: BTreeMap<(usize, usize), u32>,
    /// The dealer's announced set, if a large enough clique exists.
    pub v: Option<BTreeSet<usize>>,
}

impl ShareBranch {
    pub fn share_complete(&self) -> bool {
        self.v.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ShareResult {
    pub params: SavssParams,
    pub dealer: usize,
    /// Size of the dealer superposition.
    pub support: usize,
    pub branches: Vec<ShareBranch>,
    /// Set because the verification-set rule is the simplified one.
    pub simplified_rule: bool,
}

pub fn dealer_register() -> String {
    "savss.D".into()
}

pub fn share_register(i: usize) -> String {
    format!("savss.S.{i}")
}

pub fn eval_register(i: usize, j: usize) -> String {
    format!("savss.Q.{i}.{j}")
}

/// Copy of `Q_i^{(j)}` that player `i` sends to player `j`.
pub fn check_register(i: usize, j: usize) -> String {
    format!("savss.R.{i}.{j}")
}

fn layout(params: &SavssParams) -> Result<RegisterLayout, StateError> {
    let (n, t, p) = (params.n, params.t, params.p as u16);
    let mut l = RegisterLayout::new();
    l.add(dealer_register(), params.coefficient_count(), p)?;
    for i in 0..n {
        l.add(share_register(i), t + 1, p)?;
    }
    for i in 0..n {
        for j in 0..n {
            l.add(eval_register(i, j), 1, p)?;
            l.add(check_register(i, j), 1, p)?;
        }
    }
    Ok(l)
}

fn sites(state: &SparseState, name: &str) -> Result<Vec<usize>, StateError> {
    Ok(state.layout().get(name)?.range().collect())
}

/// Runs the share phase and enumerates every measurement outcome.
pub fn savss_share(params: SavssParams, dealer: usize, behavior: &DealerBehavior) -> Result<ShareResult, SavssError> {
    let (n, t, p) = (params.n, params.t, params.p);
    let support = (p as u64).pow(params.coefficient_count() as u32);
    if support > SUPPORT_BUDGET {
        return Err(SavssError::SupportTooLarge(support));
    }
    let field = params.field();
    let state = SparseState::zero(layout(&params)?);
    // Uniform over the register is uniform over every coefficient tuple.
    let mut state = state.prepare_distribution(&dealer_register(), &ClassicalDistribution::uniform(support))?;
    let d_sites = sites(&state, &dealer_register())?;
    let h = match behavior {
        DealerBehavior::Honest => vec![vec![0; t + 1]; t + 1],
        DealerBehavior::Asymmetric(h) => h.clone(),
    };
    // S_i := f(x, i) + h(x, i).
    for i in 0..n {
        let y = params.point(i);
        let h_row: Vec<u32> = h.iter().map(|row| field.eval(row, y)).collect();
        let out = sites(&state, &share_register(i))?;
        let f = move |c: &[u16]| {
            let poly = SymmetricBivariate { params, coeffs: c.iter().map(|&v| v as u32).collect() };
            poly.share(y).iter().zip(&h_row).map(|(&a, &b)| field.add(a, b) as u16).collect()
        };
        state = state.apply_permutation(&FunctionAdd::new(d_sites.clone(), out, vec![p as u16; t + 1], f))?;
    }
    // Q_i^{(j)} := S_i(j), then R_i^{(j)} := Q_i^{(j)}.
    for i in 0..n {
        let s_i = sites(&state, &share_register(i))?;
        for j in 0..n {
            let x = params.point(j);
            let q = sites(&state, &eval_register(i, j))?;
            let f = move |c: &[u16]| vec![field.eval(&c.iter().map(|&v| v as u32).collect::<Vec<_>>(), x) as u16];
            state = state.apply_permutation(&FunctionAdd::new(s_i.clone(), q.clone(), vec![p as u16], f))?;
            let r = sites(&state, &check_register(i, j))?;
            state = state.apply_permutation(&FunctionAdd::new(q, r, vec![p as u16], |v: &[u16]| v.to_vec()))?;
        }
    }
    // Player j receives R_i^{(j)} and subtracts its own Q_j^{(i)}.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = sites(&state, &eval_register(j, i))?;
            let r = sites(&state, &check_register(i, j))?;
            let f = move |v: &[u16]| vec![field.sub(0, v[0] as u32) as u16];
            state = state.apply_permutation(&FunctionAdd::new(q, r, vec![p as u16], f))?;
        }
    }
    let mut branches = vec![(1.0, state, BTreeMap::new())];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut next = Vec::new();
            for (prob, st, outcomes) in branches {
                let r = sites(&st, &check_register(i, j))?;
                for b in st.measurement_branches(&r)? {
                    let mut o: BTreeMap<(usize, usize), u32> = outcomes.clone();
                    o.insert((j, i), b.outcome[0] as u32);
                    next.push((prob * b.probability, b.state, o));
                }
            }
            branches = next;
        }
    }
    let bracha = Bracha::new(n, t);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    for (probability, state, r_outcomes) in branches {
        let mut ok = BTreeSet::new();
        for (&(i, j), &v) in &r_outcomes {
            if v == 0 {
                // Every "ok" goes through reliable broadcast; honest players
                // all see it.
                let d = bracha.run(i, &SenderBehavior::Honest(j as u32), &BTreeSet::new(), &mut rng);
                if d.delivered.iter().all(|x| *x == Some(j as u32)) {
                    ok.insert((i, j));
                }
            }
        }
        let v = clique(n, n - t, &ok);
        out.push(ShareBranch { probability, state, ok, r_outcomes, v });
    }
    Ok(ShareResult { params, dealer, support: support as usize, branches: out, simplified_rule: true })
}

/// Lexicographically first `size`-set whose members all vouch for each other.
fn clique(n: usize, size: usize, ok: &BTreeSet<(usize, usize)>) -> Option<BTreeSet<usize>> {
    let mut sets: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    sets.sort();
    sets.into_iter()
        .find(|s| s.iter().all(|&a| s.iter().all(|&b| a == b || (ok.contains(&(a, b)) && ok.contains(&(b, a))))))
        .map(|s| s.into_iter().collect())
}

/// One outcome of reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct RecBranch {
    pub probability: f64,
    /// Broadcast share polynomial of each player.
    pub broadcast: Vec<Vec<u32>>,
    /// Output of each good player; `None` when it could not reconstruct.
    pub outputs: Vec<Option<u32>>,
    /// `(i, j)`: player `i` shuns player `j`.
    pub shuns: BTreeSet<(usize, usize)>,
}

/// Measures every share register and reconstructs. `liars[j]` is added to
/// player `j`'s broadcast polynomial.
pub fn savss_reconstruct(
    share: &ShareResult,
    branch: &ShareBranch,
    liars: &BTreeMap<usize, Vec<u32>>,
) -> Result<Vec<RecBranch>, SavssError> {
    let params = share.params;
    let (n, t) = (params.n, params.t);
    let field = params.field();
    let Some(v) = &branch.v else {
        return Ok(Vec::new());
    };
    let all: Vec<usize> =
        (0..n).flat_map(|i| sites(&branch.state, &share_register(i)).expect("share register")).collect();
    let mut out = Vec::new();
    for b in branch.state.measurement_branches(&all)? {
        let mut honest: Vec<Vec<u32>> = Vec::new();
        for i in 0..n {
            honest.push(b.outcome[i * (t + 1)..(i + 1) * (t + 1)].iter().map(|&x| x as u32).collect());
        }
        let mut broadcast = honest.clone();
        for (&j, delta) in liars {
            for (c, d) in broadcast[j].iter_mut().zip(delta) {
                *c = field.add(*c, *d);
            }
        }
        // Good broadcasts agree pairwise, so one that clashes with more than
        // `t` others is a lie.
        let clashes = |j: usize| {
            (0..n)
                .filter(|&k| field.eval(&broadcast[j], params.point(k)) != field.eval(&broadcast[k], params.point(j)))
                .count()
        };
        let publicly_bad: BTreeSet<usize> = (0..n).filter(|&j| clashes(j) > t).collect();
        let mut outputs = vec![None; n];
        let mut shuns = BTreeSet::new();
        for i in 0..n {
            if liars.contains_key(&i) {
                continue;
            }
            let xi = params.point(i);
            let mut points = Vec::new();
            for j in 0..n {
                let agree = field.eval(&broadcast[j], xi) == field.eval(&honest[i], params.point(j));
                if !agree {
                    shuns.insert((i, j));
                } else if v.contains(&j) && !publicly_bad.contains(&j) {
                    // f(0, j) is the constant term of j's share.
                    points.push((params.point(j), broadcast[j][0]));
                }
            }
            outputs[i] = consistent_value(&field, t, &points);
        }
        out.push(RecBranch { probability: branch.probability * b.probability, broadcast, outputs, shuns });
    }
    Ok(out)
}

/// Value at 0 of the unique degree-`t` polynomial through `points`, if
/// there are at least `t + 1` of them and they all agree.
fn consistent_value(field: &PrimeField, t: usize, points: &[(u32, u32)]) -> Option<u32> {
    if points.len() <= t {
        return None;
    }
    let base = &points[..=t];
    let poly = field.interpolate(base);
    points[t + 1..].iter().all(|&(x, y)| field.eval(&poly, x) == y).then(|| field.interpolate_at_zero(base))
}

/// Largest total-variation distance, over pairs of secrets, between the
/// distributions of what `subset` sees: its share, evaluation and check
/// registers, plus the broadcast ok pattern.
pub fn savss_privacy_audit(share: &ShareResult, subset: &BTreeSet<usize>) -> Result<f64, SavssError> {
    let params = share.params;
    let p = params.p;
    let mut per_secret: Vec<BTreeMap<(Vec<u16>, Vec<(usize, usize)>), f64>> = vec![BTreeMap::new(); p as usize];
    for branch in &share.branches {
        let layout = branch.state.layout();
        let mut seen = Vec::new();
        for &i in subset {
            seen.extend(layout.get(&share_register(i))?.range());
            for j in 0..params.n {
                seen.extend(layout.get(&eval_register(i, j))?.range());
                seen.extend(layout.get(&check_register(j, i))?.range());
            }
        }
        let secret_site = layout.get(&dealer_register())?.range().start;
        let ok: Vec<(usize, usize)> = branch.ok.iter().copied().collect();
        for (cfg, a) in branch.state.amplitudes() {
            let view: Vec<u16> = seen.iter().map(|&s| cfg[s]).collect();
            *per_secret[cfg[secret_site] as usize].entry((view, ok.clone())).or_default() +=
                branch.probability * a.norm_sqr();
        }
    }
    let normalized: Vec<BTreeMap<_, f64>> = per_secret
        .into_iter()
        .map(|m| {
            let total: f64 = m.values().sum();
            m.into_iter().map(|(k, v)| (k, v / total)).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in &normalized {
        for b in &normalized {
            let keys: BTreeSet<_> = a.keys().chain(b.keys()).collect();
            let tv: f64 = 0.5 * keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    Ok(worst)
}

/// Distribution of the reconstructed secret over all branches of an honest
/// run, as seen by player 0.
pub fn secret_distribution(share: &ShareResult) -> Result<ClassicalDistribution, SavssError> {
    let mut probs: BTreeMap<u64, f64> = BTreeMap::new();
    for branch in &share.branches {
        for r in savss_reconstruct(share, branch, &BTreeMap::new())? {
            if let Some(s) = r.outputs[0] {
                *probs.entry(s as u64).or_default() += r.probability;
            }
        }
    }
    Ok(ClassicalDistribution::new(probs)?)
}
