use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{BasisConfig, ClassicalDistribution, RegisterLayout, Result, StateError};

/// Amplitudes with modulus below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Allowed deviation of the squared norm from one.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Normalized pure state stored sparsely over basis configurations.
///
/// Operations consume the state and hand back a new one; a `SparseState` is
/// never mutated in place once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    layout: RegisterLayout,
    amps: BTreeMap<BasisConfig, Complex64>,
}

impl SparseState {
    /// All registers in `|0...0>`.
    pub fn zero(layout: RegisterLayout) -> Self {
        let cfg = vec![0u16; layout.total_sites()];
        Self { layout, amps: BTreeMap::from([(cfg, Complex64::new(1.0, 0.0))]) }
    }

    pub fn basis(layout: RegisterLayout, config: BasisConfig) -> Result<Self> {
        layout.check_config(&config)?;
        Ok(Self { layout, amps: BTreeMap::from([(config, Complex64::new(1.0, 0.0))]) })
    }

    /// Builds a state from explicit amplitudes and normalizes it.
    pub fn from_amplitudes(
        layout: RegisterLayout,
        amps: impl IntoIterator<Item = (BasisConfig, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<BasisConfig, Complex64> = BTreeMap::new();
        for (cfg, a) in amps {
            layout.check_config(&cfg)?;
            *map.entry(cfg).or_default() += a;
        }
        Self::from_map(layout, map)
    }

    pub(crate) fn from_map(layout: RegisterLayout, amps: BTreeMap<BasisConfig, Complex64>) -> Result<Self> {
        let mut s = Self { layout, amps };
        s.normalize()?;
        Ok(s)
    }

    /// Prunes tiny amplitudes and rescales to unit norm.
    pub(crate) fn normalize(&mut self) -> Result<()> {
        self.amps.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(StateError::ZeroNorm);
        }
        if (n - 1.0).abs() > f64::EPSILON {
            let s = n.sqrt();
            for a in self.amps.values_mut() {
                *a /= s;
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&BasisConfig, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, config: &[u16]) -> Complex64 {
        self.amps.get(config).copied().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Appends a fresh register in `|0>`.
    pub fn with_register(self, name: impl Into<String>, sites: usize, dim: u16) -> Result<Self> {
        if sites == 0 || dim < 2 {
            return Err(StateError::BadRegisterShape { sites, dim });
        }
        self.with_register_mixed(name, vec![dim; sites])
    }

    /// Appends a fresh register with per-site dimensions in `|0>`.
    pub fn with_register_mixed(mut self, name: impl Into<String>, dims: Vec<u16>) -> Result<Self> {
        let sites = dims.len();
        self.layout.add_mixed(name, dims)?;
        let amps = std::mem::take(&mut self.amps);
        self.amps = amps
            .into_iter()
            .map(|(mut cfg, a)| {
                cfg.extend(std::iter::repeat_n(0, sites));
                (cfg, a)
            })
            .collect();
        Ok(self)
    }

    pub fn is_zero_on(&self, sites: &[usize]) -> bool {
        self.amps.keys().all(|cfg| sites.iter().all(|&s| cfg[s] == 0))
    }

    /// Replaces `|0>` in `register` by `sum_r sqrt(Pr[r]) |r>`.
    pub fn prepare_distribution(self, register: &str, dist: &ClassicalDistribution) -> Result<Self> {
        let reg = self.layout.get(register)?.clone();
        let sites: Vec<usize> = reg.range().collect();
        if !self.is_zero_on(&sites) {
            return Err(StateError::RegisterNotZero(register.to_string()));
        }
        let encoded: Vec<(Vec<u16>, f64)> = dist
            .iter()
            .map(|(v, p)| reg.encode(v).map(|d| (d, p.sqrt())))
            .collect::<Result<_>>()?;
        let mut out = BTreeMap::new();
        for (cfg, a) in self.amps {
            for (digits, w) in &encoded {
                let mut c = cfg.clone();
                c[reg.range()].copy_from_slice(digits);
                out.insert(c, a * *w);
            }
        }
        Self::from_map(self.layout, out)
    }

    /// Inner product `<self|other>`; layouts must agree.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        debug_assert_eq!(self.layout.dims(), other.layout.dims());
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        let mut acc = Complex64::default();
        for (cfg, a) in small {
            if let Some(b) = large.get(cfg) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    /// `|<self|other>|^2`, i.e. fidelity between pure states.
    pub fn fidelity(&self, other: &SparseState) -> f64 {
        if self.layout.dims() != other.layout.dims() {
            return 0.0;
        }
        self.inner(other).norm_sqr()
    }

    /// Equality up to a global phase, per amplitude within `tol`.
    pub fn approx_eq(&self, other: &SparseState, tol: f64) -> bool {
        if self.layout.dims() != other.layout.dims() {
            return false;
        }
        let ip = self.inner(other);
        let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        let keys: std::collections::BTreeSet<&BasisConfig> = self.amps.keys().chain(other.amps.keys()).collect();
        keys.into_iter().all(|k| (self.amplitude(k) * phase - other.amplitude(k)).norm() <= tol)
    }

    /// Probability of each value pattern on `sites`.
    pub fn marginal(&self, sites: &[usize]) -> BTreeMap<Vec<u16>, f64> {
        let mut out = BTreeMap::new();
        for (cfg, a) in &self.amps {
            let key: Vec<u16> = sites.iter().map(|&s| cfg[s]).collect();
            *out.entry(key).or_insert(0.0) += a.norm_sqr();
        }
        out
    }

    /// The value on `sites` if every basis term agrees on it.
    pub fn definite_value(&self, sites: &[usize]) -> Option<Vec<u16>> {
        let mut it = self.amps.keys().map(|cfg| sites.iter().map(|&s| cfg[s]).collect::<Vec<_>>());
        let first = it.next()?;
        it.all(|v| v == first).then_some(first)
    }

    /// Value of a whole register if it is definite.
    pub fn register_value(&self, name: &str) -> Result<Option<u64>> {
        let reg = self.layout.get(name)?;
        let sites: Vec<usize> = reg.range().collect();
        Ok(self.definite_value(&sites).map(|d| reg.decode(&d)))
    }

    /// Product state over `layout` assembled from parts whose registers are
    /// (by name) a partition of `layout`. Registers not covered by any part
    /// are `|0>`.
    pub fn compose(layout: RegisterLayout, parts: &[&SparseState]) -> Result<Self> {
        let mut acc: BTreeMap<BasisConfig, Complex64> =
            BTreeMap::from([(vec![0u16; layout.total_sites()], Complex64::new(1.0, 0.0))]);
        for part in parts {
            let mut map = Vec::new();
            for reg in part.layout.registers() {
                let target = layout.get(&reg.name)?;
                if target.dims != reg.dims {
                    return Err(StateError::BadRegisterShape { sites: reg.sites, dim: reg.dims[0] });
                }
                map.extend(reg.range().zip(target.range()));
            }
            let mut next = BTreeMap::new();
            for (cfg, a) in &acc {
                for (pcfg, b) in &part.amps {
                    let mut c = cfg.clone();
                    for &(from, to) in &map {
                        c[to] = pcfg[from];
                    }
                    next.insert(c, a * b);
                }
            }
            acc = next;
        }
        Self::from_map(layout, acc)
    }

    /// The factor living on `registers`, assuming the state is a product
    /// across that cut.
    pub fn factor(&self, registers: &[String]) -> Result<SparseState> {
        let mut sub_layout = RegisterLayout::new();
        let mut sites = Vec::new();
        for name in registers {
            let r = self.layout.get(name)?;
            sub_layout.add_mixed(name.clone(), r.dims.clone())?;
            sites.extend(r.range());
        }
        let keep: std::collections::BTreeSet<usize> = sites.iter().copied().collect();
        let rest: Vec<usize> = (0..self.layout.total_sites()).filter(|s| !keep.contains(s)).collect();
        if super::schmidt_rank(self, &sites) > 1 {
            return Err(StateError::NotProduct);
        }
        // Fix the complement to its largest-weight value and read the slice.
        let (anchor, _) = self
            .amps
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .ok_or(StateError::ZeroNorm)?;
        let anchor_rest: Vec<u16> = rest.iter().map(|&s| anchor[s]).collect();
        let mut out = BTreeMap::new();
        for (cfg, a) in &self.amps {
            if rest.iter().zip(&anchor_rest).all(|(&s, &v)| cfg[s] == v) {
                out.insert(sites.iter().map(|&s| cfg[s]).collect::<Vec<_>>(), *a);
            }
        }
        Self::from_map(sub_layout, out)
    }

    /// Drops `registers`, which must be in a definite basis value.
    pub fn without_registers(&self, registers: &[String]) -> Result<SparseState> {
        let keep: Vec<String> = self
            .layout
            .registers()
            .iter()
            .filter(|r| !registers.contains(&r.name))
            .map(|r| r.name.clone())
            .collect();
        for name in registers {
            let r = self.layout.get(name)?;
            if self.definite_value(&r.range().collect::<Vec<_>>()).is_none() {
                return Err(StateError::NotProduct);
            }
        }
        self.factor(&keep)
    }
}

impl SparseState {
    pub(crate) fn into_amps(self) -> BTreeMap<BasisConfig, Complex64> {
        self.amps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits(n: usize) -> RegisterLayout {
        let mut l = RegisterLayout::new();
        for i in 0..n {
            l.add(format!("q{i}"), 1, 2).unwrap();
        }
        l
    }

    #[test]
    fn uniform_bit_purification() {
        let s = SparseState::zero(qubits(1))
            .prepare_distribution("q0", &ClassicalDistribution::uniform(2))
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(&[0]).re - h).abs() < 1e-12);
        assert!((s.amplitude(&[1]).re - h).abs() < 1e-12);
    }

    #[test]
    fn biased_coin_amplitudes() {
        let d = ClassicalDistribution::new([(0, 0.25), (1, 0.75)]).unwrap();
        let s = SparseState::zero(qubits(1)).prepare_distribution("q0", &d).unwrap();
        assert!((s.amplitude(&[0]).re - 0.5).abs() < 1e-12);
        assert!((s.amplitude(&[1]).re - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_on_qudit() {
        let mut l = RegisterLayout::new();
        l.add("r", 1, 8).unwrap();
        let s = SparseState::zero(l).prepare_distribution("r", &ClassicalDistribution::point(5)).unwrap();
        assert_eq!(s.support_len(), 1);
        assert!((s.amplitude(&[5]).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prepare_requires_zero_and_capacity() {
        let s = SparseState::zero(qubits(1));
        assert!(matches!(
            s.clone().prepare_distribution("q0", &ClassicalDistribution::uniform(3)),
            Err(StateError::ValueTooLarge { .. })
        ));
        let s = s.prepare_distribution("q0", &ClassicalDistribution::point(1)).unwrap();
        assert_eq!(
            s.prepare_distribution("q0", &ClassicalDistribution::point(1)).unwrap_err(),
            StateError::RegisterNotZero("q0".into())
        );
    }

    #[test]
    fn compose_and_factor_round_trip() {
        let a = SparseState::zero(qubits(1)).prepare_distribution("q0", &ClassicalDistribution::uniform(2)).unwrap();
        let mut lb = RegisterLayout::new();
        lb.add("q1", 1, 2).unwrap();
        let b = SparseState::basis(lb, vec![1]).unwrap();
        let full = SparseState::compose(qubits(2), &[&a, &b]).unwrap();
        assert_eq!(full.support_len(), 2);
        let back = full.factor(&["q0".to_string()]).unwrap();
        assert!(back.approx_eq(&a, 1e-12));
        let dropped = full.without_registers(&["q1".to_string()]).unwrap();
        assert!(dropped.approx_eq(&a, 1e-12));
    }
}
