//! Randomized checks that computational-basis measurement commutes with
//! permutation unitaries and with computational-basis projectors.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{BasisConfig, Complex64, RegisterLayout, Result, SiteRelabel, SparseState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutationReport {
    pub seed: u64,
    /// Instances per variant.
    pub instances: usize,
    pub branches: usize,
    /// Largest mismatch of branch weights, either variant.
    pub max_probability_deviation: f64,
    /// Smallest fidelity between matched post-measurement states.
    pub min_fidelity: f64,
    /// Branches present on one side only.
    pub unmatched: usize,
}

impl CommutationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.unmatched == 0 && self.max_probability_deviation <= tol && self.min_fidelity >= 1.0 - tol
    }
}

/// A random normalized state over 1..=`max_sites` sites of dimension
/// 2..=`max_dim`, with a random support and complex amplitudes.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, max_sites: usize, max_dim: u16) -> SparseState {
    let sites = rng.gen_range(1..=max_sites);
    let dims: Vec<u16> = (0..sites).map(|_| rng.gen_range(2..=max_dim)).collect();
    let mut layout = RegisterLayout::new();
    for (i, &d) in dims.iter().enumerate() {
        layout.add(format!("q{i}"), 1, d).expect("fresh register");
    }
    let space: usize = dims.iter().map(|&d| d as usize).product();
    let support = rng.gen_range(1..=space.min(24));
    let amps: Vec<(BasisConfig, Complex64)> = (0..support)
        .map(|_| {
            let cfg = dims.iter().map(|&d| rng.gen_range(0..d)).collect();
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (cfg, a)
        })
        .collect();
    // Cancelling amplitudes are possible in principle; fall back to |0..0>.
    SparseState::from_amplitudes(layout.clone(), amps)
        .unwrap_or_else(|_| SparseState::basis(layout, vec![0; sites]).expect("in range"))
}

/// Every configuration of sites with dimensions `dims`, in odometer order.
pub fn configurations(dims: &[u16]) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        out = out.into_iter().flat_map(|p| (0..d).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Random non-empty subset of `0..n`, sorted.
pub fn random_sites<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(rng.gen_range(1..=n));
    all.sort_unstable();
    all
}

/// A uniformly random bijection on the configurations of `sites`, as a table.
pub fn random_relabel<R: Rng + ?Sized>(rng: &mut R, sites: Vec<usize>, dims: &[u16]) -> (SiteRelabel, BTreeMap<Vec<u16>, Vec<u16>>) {
    let local: Vec<u16> = sites.iter().map(|&s| dims[s]).collect();
    let from = configurations(&local);
    let mut to = from.clone();
    to.shuffle(rng);
    let table: BTreeMap<Vec<u16>, Vec<u16>> = from.into_iter().zip(to).collect();
    let lookup = table.clone();
    (SiteRelabel::new(sites, move |v| lookup[v].clone()), table)
}

/// Keeps the terms whose values on `sites` lie in `keep`. Returns the
/// weight kept and the renormalized state, if any.
pub fn project_onto(state: &SparseState, sites: &[usize], keep: &BTreeSet<Vec<u16>>) -> Result<(f64, Option<SparseState>)> {
    let amps: Vec<(BasisConfig, Complex64)> = state
        .amplitudes()
        .filter(|(cfg, _)| keep.contains(&sites.iter().map(|&s| cfg[s]).collect::<Vec<u16>>()))
        .map(|(c, a)| (c.clone(), *a))
        .collect();
    let weight: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum();
    if amps.is_empty() {
        return Ok((0.0, None));
    }
    Ok((weight, Some(SparseState::from_amplitudes(state.layout().clone(), amps)?)))
}

#[derive(Default)]
struct Tally {
    branches: usize,
    dev: f64,
    fid: f64,
    unmatched: usize,
}

impl Tally {
    fn compare(&mut self, a: BTreeMap<Vec<u16>, (f64, SparseState)>, b: BTreeMap<Vec<u16>, (f64, SparseState)>) {
        let keys: BTreeSet<&Vec<u16>> = a.keys().chain(b.keys()).collect();
        for k in keys {
            match (a.get(k), b.get(k)) {
                (Some((p, x)), Some((q, y))) => {
                    self.branches += 1;
                    self.dev = self.dev.max((p - q).abs());
                    self.fid = self.fid.min(x.fidelity(y));
                }
                // A branch of negligible weight may be pruned on one side only.
                (Some((p, _)), None) | (None, Some((p, _))) => {
                    if *p > 1e-12 {
                        self.unmatched += 1;
                    }
                    self.dev = self.dev.max(*p);
                }
                (None, None) => {}
            }
        }
    }
}

fn permutation_instance<R: Rng + ?Sized>(rng: &mut R, tally: &mut Tally) -> Result<()> {
    let psi = random_state(rng, 6, 5);
    let sites = random_sites(rng, psi.layout().total_sites());
    let (u, table) = random_relabel(rng, sites.clone(), psi.layout().dims());
    // Measure, then permute: outcome v becomes u(v).
    let mut first = BTreeMap::new();
    for b in psi.measurement_branches(&sites)? {
        first.insert(table[&b.outcome].clone(), (b.probability, b.state.apply_permutation(&u)?));
    }
    let mut second = BTreeMap::new();
    for b in psi.apply_permutation(&u)?.measurement_branches(&sites)? {
        second.insert(b.outcome, (b.probability, b.state));
    }
    tally.compare(first, second);
    Ok(())
}

fn projector_instance<R: Rng + ?Sized>(rng: &mut R, tally: &mut Tally) -> Result<()> {
    let psi = random_state(rng, 6, 5);
    let sites = random_sites(rng, psi.layout().total_sites());
    // The projector may act on other sites than the measurement.
    let on = random_sites(rng, psi.layout().total_sites());
    let local: Vec<u16> = on.iter().map(|&s| psi.layout().dim(s)).collect();
    let keep: BTreeSet<Vec<u16>> = configurations(&local).into_iter().filter(|_| rng.gen_bool(0.5)).collect();
    // Weights are unnormalized: Pr[outcome] * Pr[projector passes].
    let mut first = BTreeMap::new();
    for b in psi.measurement_branches(&sites)? {
        if let (w, Some(s)) = project_onto(&b.state, &on, &keep)? {
            first.insert(b.outcome, (b.probability * w, s));
        }
    }
    let mut second = BTreeMap::new();
    if let (w, Some(s)) = project_onto(&psi, &on, &keep)? {
        for b in s.measurement_branches(&sites)? {
            second.insert(b.outcome, (w * b.probability, b.state));
        }
    }
    tally.compare(first, second);
    Ok(())
}

/// Runs `instances` random permutation cases and as many projector cases.
pub fn commutation_suite(seed: u64, instances: usize) -> Result<CommutationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally { fid: 1.0, ..Default::default() };
    for _ in 0..instances {
        permutation_instance(&mut rng, &mut tally)?;
        projector_instance(&mut rng, &mut tally)?;
    }
    Ok(CommutationReport {
        seed,
        instances,
        branches: tally.branches,
        max_probability_deviation: tally.dev,
        min_fidelity: tally.fid,
        unmatched: tally.unmatched,
    })
}
