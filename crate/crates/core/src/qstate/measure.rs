use std::collections::BTreeMap;

use rand::Rng;

use super::{BasisConfig, Result, SparseState, StateError};
use num_complex::Complex64;

/// One outcome of a computational-basis measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: Vec<u16>,
    pub probability: f64,
    pub state: SparseState,
}

impl SparseState {
    /// All outcomes of measuring `sites`, ordered by outcome.
    pub fn measurement_branches(&self, sites: &[usize]) -> Result<Vec<Branch>> {
        if sites.is_empty() {
            return Err(StateError::EmptySites);
        }
        for &s in sites {
            if s >= self.layout().total_sites() {
                return Err(StateError::SiteOutOfRange(s));
            }
        }
        let mut parts: BTreeMap<Vec<u16>, BTreeMap<BasisConfig, Complex64>> = BTreeMap::new();
        for (cfg, a) in self.amplitudes() {
            let key: Vec<u16> = sites.iter().map(|&s| cfg[s]).collect();
            parts.entry(key).or_default().insert(cfg.clone(), *a);
        }
        parts
            .into_iter()
            .map(|(outcome, amps)| {
                let probability = amps.values().map(|a| a.norm_sqr()).sum();
                let state = SparseState::from_map(self.layout().clone(), amps)?;
                Ok(Branch { outcome, probability, state })
            })
            .collect()
    }

    /// Samples one branch using `rng`.
    pub fn measure<R: Rng + ?Sized>(&self, sites: &[usize], rng: &mut R) -> Result<(Vec<u16>, SparseState)> {
        let branches = self.measurement_branches(sites)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = branches.len() - 1;
        for (i, b) in branches.into_iter().enumerate() {
            acc += b.probability;
            if u < acc || i == last {
                return Ok((b.outcome, b.state));
            }
        }
        unreachable!("measurement with no branches")
    }

    /// Projects `sites` onto `values`. Returns the branch probability and the
    /// renormalized post-state, or `None` when the probability is zero.
    pub fn project(&self, sites: &[usize], values: &[u16]) -> Result<(f64, Option<SparseState>)> {
        let (p, amps) = self.project_raw(sites, values)?;
        if amps.is_empty() {
            return Ok((0.0, None));
        }
        Ok((p, Some(SparseState::from_map(self.layout().clone(), amps)?)))
    }

    /// Unnormalized projection: `(weight, amplitudes)`.
    pub fn project_raw(&self, sites: &[usize], values: &[u16]) -> Result<(f64, BTreeMap<BasisConfig, Complex64>)> {
        if sites.len() != values.len() {
            return Err(StateError::EmptySites);
        }
        for (&s, &v) in sites.iter().zip(values) {
            if s >= self.layout().total_sites() {
                return Err(StateError::SiteOutOfRange(s));
            }
            let d = self.layout().dim(s);
            if v >= d {
                return Err(StateError::ValueOutOfRange { site: s, value: v, dim: d });
            }
        }
        let amps: BTreeMap<BasisConfig, Complex64> = self
            .amplitudes()
            .filter(|(cfg, _)| sites.iter().zip(values).all(|(&s, &v)| cfg[s] == v))
            .map(|(c, a)| (c.clone(), *a))
            .collect();
        let p = amps.values().map(|a| a.norm_sqr()).sum();
        Ok((p, amps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{ClassicalDistribution, FunctionAdd, RegisterLayout};
    use rand::SeedableRng;

    fn bell() -> SparseState {
        let mut l = RegisterLayout::new();
        l.add("a", 1, 2).unwrap();
        l.add("b", 1, 2).unwrap();
        SparseState::zero(l)
            .prepare_distribution("a", &ClassicalDistribution::uniform(2))
            .unwrap()
            .apply_permutation(&FunctionAdd::new(vec![0], vec![1], vec![2], |v| vec![v[0]]))
            .unwrap()
    }

    #[test]
    fn bell_marginal() {
        let br = bell().measurement_branches(&[0]).unwrap();
        assert_eq!(br.len(), 2);
        assert_eq!(br[0].outcome, vec![0]);
        assert!((br[0].probability - 0.5).abs() < 1e-12);
        assert!((br[1].state.amplitude(&[1, 1]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coin_bias_branches() {
        let mut l = RegisterLayout::new();
        l.add("c", 1, 2).unwrap();
        let s = SparseState::zero(l)
            .prepare_distribution("c", &ClassicalDistribution::bernoulli_zero(0.25).unwrap())
            .unwrap();
        let br = s.measurement_branches(&[0]).unwrap();
        assert!((br[0].probability - 0.25).abs() < 1e-12);
        assert!((br[1].probability - 0.75).abs() < 1e-12);
    }

    #[test]
    fn project_bell_and_outside_support() {
        let (p, st) = bell().project(&[0], &[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((st.unwrap().amplitude(&[0, 0]).norm() - 1.0).abs() < 1e-12);
        let (p, st) = bell().project(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(p, 0.0);
        assert!(st.is_none());
        assert!(bell().measurement_branches(&[]).is_err());
    }

    #[test]
    fn measure_is_seed_deterministic() {
        let s = bell();
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        assert_eq!(s.measure(&[0], &mut r1).unwrap(), s.measure(&[0], &mut r2).unwrap());
    }
}
