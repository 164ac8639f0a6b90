use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::{Result, SparseState, StateError};

/// Sub-spaces up to this many points are checked exhaustively for
/// injectivity by [`SitePermutation::verify`].
pub const PERMUTATION_CHECK_LIMIT: u64 = 1 << 16;

/// A bijection on the basis values of a fixed list of sites.
pub trait SitePermutation {
    fn sites(&self) -> &[usize];
    /// Image of the sub-configuration read from `sites()` in order.
    fn map(&self, values: &[u16]) -> Vec<u16>;

    /// Exhaustive injectivity check over the declared sub-space when it has at
    /// most [`PERMUTATION_CHECK_LIMIT`] points. Larger maps are accepted.
    fn verify(&self, dims: &[u16]) -> Result<()> {
        let local: Vec<u16> = self.sites().iter().map(|&s| dims[s]).collect();
        let size = local.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
        match size {
            Some(n) if n <= PERMUTATION_CHECK_LIMIT => {
                let mut seen = HashSet::with_capacity(n as usize);
                let mut cur = vec![0u16; local.len()];
                loop {
                    let img = self.map(&cur);
                    if img.iter().zip(&local).any(|(&v, &d)| v >= d) || !seen.insert(img) {
                        return Err(StateError::NotInjective);
                    }
                    // odometer increment
                    let mut i = local.len();
                    loop {
                        if i == 0 {
                            return Ok(());
                        }
                        i -= 1;
                        cur[i] += 1;
                        if cur[i] < local[i] {
                            break;
                        }
                        cur[i] = 0;
                    }
                }
            }
            _ => Ok(()),
        }
    }
}

type SiteFn = Arc<dyn Fn(&[u16]) -> Vec<u16> + Send + Sync>;

/// `|v>|y> -> |v>|y + f(v)>` with per-site modular addition. A bijection for
/// every `f`.
#[derive(Clone)]
pub struct FunctionAdd {
    sites: Vec<usize>,
    n_inputs: usize,
    out_dims: Vec<u16>,
    f: SiteFn,
}

impl FunctionAdd {
    pub fn new(
        inputs: Vec<usize>,
        outputs: Vec<usize>,
        out_dims: Vec<u16>,
        f: impl Fn(&[u16]) -> Vec<u16> + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(outputs.len(), out_dims.len());
        let n_inputs = inputs.len();
        let mut sites = inputs;
        sites.extend(outputs);
        Self { sites, n_inputs, out_dims, f: Arc::new(f) }
    }
}

impl SitePermutation for FunctionAdd {
    fn sites(&self) -> &[usize] {
        &self.sites
    }

    fn map(&self, values: &[u16]) -> Vec<u16> {
        let (v, y) = values.split_at(self.n_inputs);
        let fv = (self.f)(v);
        debug_assert_eq!(fv.len(), y.len());
        let mut out = v.to_vec();
        out.extend(
            y.iter()
                .zip(&fv)
                .zip(&self.out_dims)
                .map(|((&a, &b), &d)| ((a as u32 + b as u32) % d as u32) as u16),
        );
        out
    }
}

/// Arbitrary closure, trusted (or verified) to be a bijection.
#[derive(Clone)]
pub struct SiteRelabel {
    sites: Vec<usize>,
    f: SiteFn,
}

impl SiteRelabel {
    pub fn new(sites: Vec<usize>, f: impl Fn(&[u16]) -> Vec<u16> + Send + Sync + 'static) -> Self {
        Self { sites, f: Arc::new(f) }
    }

    /// Swaps the values of two equal-length site groups.
    pub fn swap(a: Vec<usize>, b: Vec<usize>) -> Self {
        assert_eq!(a.len(), b.len());
        let k = a.len();
        let mut sites = a;
        sites.extend(b);
        Self::new(sites, move |v| {
            let mut out = v[k..].to_vec();
            out.extend_from_slice(&v[..k]);
            out
        })
    }

    /// Adds `delta[i]` (mod dims) to each site.
    pub fn shift(sites: Vec<usize>, delta: Vec<u16>, dims: Vec<u16>) -> Self {
        Self::new(sites, move |v| {
            v.iter()
                .zip(&delta)
                .zip(&dims)
                .map(|((&a, &b), &d)| ((a as u32 + b as u32) % d as u32) as u16)
                .collect()
        })
    }
}

impl SitePermutation for SiteRelabel {
    fn sites(&self) -> &[usize] {
        &self.sites
    }

    fn map(&self, values: &[u16]) -> Vec<u16> {
        (self.f)(values)
    }
}

impl SparseState {
    /// Relabels every basis term through `perm`. Amplitudes and support size
    /// are unchanged; a collision on the support is reported as
    /// [`StateError::NotInjective`].
    pub fn apply_permutation(self, perm: &dyn SitePermutation) -> Result<Self> {
        let sites = perm.sites();
        for &s in sites {
            if s >= self.layout().total_sites() {
                return Err(StateError::SiteOutOfRange(s));
            }
        }
        let dims = self.layout().dims().to_vec();
        let (layout, amps) = (self.layout().clone(), self.into_amps());
        let mut out = BTreeMap::new();
        let mut sub = Vec::with_capacity(sites.len());
        for (mut cfg, a) in amps {
            sub.clear();
            sub.extend(sites.iter().map(|&s| cfg[s]));
            let img = perm.map(&sub);
            for (&s, &v) in sites.iter().zip(&img) {
                if v >= dims[s] {
                    return Err(StateError::ValueOutOfRange { site: s, value: v, dim: dims[s] });
                }
                cfg[s] = v;
            }
            if out.insert(cfg, a).is_some() {
                return Err(StateError::NotInjective);
            }
        }
        SparseState::from_map(layout, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{ClassicalDistribution, RegisterLayout};

    fn bits(n: usize) -> RegisterLayout {
        let mut l = RegisterLayout::new();
        for i in 0..n {
            l.add(format!("q{i}"), 1, 2).unwrap();
        }
        l
    }

    #[test]
    fn identity_is_noop() {
        let s = SparseState::zero(bits(2)).prepare_distribution("q0", &ClassicalDistribution::uniform(2)).unwrap();
        let id = SiteRelabel::new(vec![0, 1], |v| v.to_vec());
        assert_eq!(s.clone().apply_permutation(&id).unwrap(), s);
    }

    #[test]
    fn cx_copy_makes_bell_pair() {
        let s = SparseState::zero(bits(2)).prepare_distribution("q0", &ClassicalDistribution::uniform(2)).unwrap();
        let cx = FunctionAdd::new(vec![0], vec![1], vec![2], |v| vec![v[0]]);
        let s = s.apply_permutation(&cx).unwrap();
        assert_eq!(s.support_len(), 2);
        assert!(s.amplitude(&[1, 1]).norm() > 0.7);
        assert!(s.amplitude(&[1, 0]).norm() == 0.0);
    }

    #[test]
    fn verify_catches_non_injective() {
        let bad = SiteRelabel::new(vec![0, 1], |_| vec![0, 0]);
        assert_eq!(bad.verify(&[2, 2]).unwrap_err(), StateError::NotInjective);
        let fa = FunctionAdd::new(vec![0, 1], vec![2], vec![3], |v| vec![v[0] + v[1]]);
        fa.verify(&[2, 2, 3]).unwrap();
    }

    #[test]
    fn collision_on_support_is_an_error() {
        let s = SparseState::zero(bits(2)).prepare_distribution("q0", &ClassicalDistribution::uniform(2)).unwrap();
        let bad = SiteRelabel::new(vec![0], |_| vec![0]);
        assert_eq!(s.apply_permutation(&bad).unwrap_err(), StateError::NotInjective);
    }
}
