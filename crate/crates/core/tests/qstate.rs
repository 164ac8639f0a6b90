use std::collections::BTreeMap;

use num_complex::Complex64;
use qba::qstate::{commutation_suite, configurations, random_relabel, random_sites, random_state, SparseState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full statevector over the odometer ordering of all configurations.
fn dense(s: &SparseState) -> Vec<Complex64> {
    configurations(s.layout().dims()).iter().map(|c| s.amplitude(c)).collect()
}

fn index(cfg: &[u16], dims: &[u16]) -> usize {
    cfg.iter().zip(dims).fold(0, |acc, (&v, &d)| acc * d as usize + v as usize)
}

#[test]
fn commutation_holds_on_random_instances() {
    let t0 = std::time::Instant::now();
    let r = commutation_suite(2024, 200).unwrap();
    assert!(r.passed(1e-9), "{r:?}");
    assert!(r.branches > 400);
    assert!(t0.elapsed().as_secs() < 10);
    assert_eq!(r, commutation_suite(2024, 200).unwrap());
}

#[test]
fn sparse_engine_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let psi = random_state(&mut rng, 5, 4);
        let dims = psi.layout().dims().to_vec();
        let sites = random_sites(&mut rng, dims.len());
        let (u, table) = random_relabel(&mut rng, sites.clone(), &dims);
        // Dense permutation matrix applied to the full vector.
        let before = dense(&psi);
        let mut after = vec![Complex64::new(0.0, 0.0); before.len()];
        for cfg in configurations(&dims) {
            let sub: Vec<u16> = sites.iter().map(|&s| cfg[s]).collect();
            let mut img = cfg.clone();
            for (k, &s) in sites.iter().enumerate() {
                img[s] = table[&sub][k];
            }
            after[index(&img, &dims)] = before[index(&cfg, &dims)];
        }
        let permuted = psi.clone().apply_permutation(&u).unwrap();
        for (a, b) in dense(&permuted).iter().zip(&after) {
            assert!((a - b).norm() <= 1e-9);
        }
        // Dense measurement: outcome weights from the vector.
        let mut weights: BTreeMap<Vec<u16>, f64> = BTreeMap::new();
        for (i, cfg) in configurations(&dims).iter().enumerate() {
            let key: Vec<u16> = sites.iter().map(|&s| cfg[s]).collect();
            *weights.entry(key).or_default() += after[i].norm_sqr();
        }
        let branches = permuted.measurement_branches(&sites).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() <= 1e-9);
        for b in branches {
            assert!((weights[&b.outcome] - b.probability).abs() <= 1e-9);
            assert!(b.state.is_normalized());
        }
    }
}
