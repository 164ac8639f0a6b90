use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{BasisConfig, Result, SparseState, StateError};

/// Largest target-subspace dimension a dense unitary may act on.
pub const DEFAULT_DENSE_CAP: usize = 256;

/// A unitary on a few sites, indexed in mixed radix with the first target
/// site most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    sites: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DenseUnitary {
    pub fn new(sites: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(StateError::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let dev = (&matrix * matrix.adjoint() - DMatrix::identity(matrix.nrows(), matrix.nrows()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-9 {
            return Err(StateError::NotUnitary(dev));
        }
        Ok(Self { sites, matrix })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Same matrix retargeted to other sites.
    pub fn on(&self, sites: Vec<usize>) -> Self {
        Self { sites, matrix: self.matrix.clone() }
    }
}

impl SparseState {
    /// Applies `u` with the default dense cap.
    pub fn apply_dense_unitary(self, u: &DenseUnitary) -> Result<Self> {
        self.apply_dense_unitary_capped(u, DEFAULT_DENSE_CAP)
    }

    pub fn apply_dense_unitary_capped(self, u: &DenseUnitary, cap: usize) -> Result<Self> {
        let dims: Vec<u16> = u
            .sites
            .iter()
            .map(|&s| {
                if s < self.layout().total_sites() {
                    Ok(self.layout().dim(s))
                } else {
                    Err(StateError::SiteOutOfRange(s))
                }
            })
            .collect::<Result<_>>()?;
        let dim: usize = dims.iter().map(|&d| d as usize).product();
        if dim > cap {
            return Err(StateError::DenseCapExceeded { dim, cap });
        }
        if u.matrix.nrows() != dim {
            return Err(StateError::DimensionMismatch { expected: dim, got: u.matrix.nrows() });
        }
        let layout = self.layout().clone();
        // Group terms by their value outside the target sites.
        let mut groups: BTreeMap<BasisConfig, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (cfg, a) in self.into_amps() {
            let idx = u.sites.iter().zip(&dims).fold(0usize, |acc, (&s, &d)| acc * d as usize + cfg[s] as usize);
            let mut rest = cfg;
            for &s in &u.sites {
                rest[s] = 0;
            }
            groups.entry(rest).or_default().push((idx, a));
        }
        let mut out = BTreeMap::new();
        for (rest, terms) in groups {
            for row in 0..dim {
                let v: Complex64 = terms.iter().map(|&(col, a)| u.matrix[(row, col)] * a).sum();
                if v.norm() >= super::PRUNE_THRESHOLD {
                    let mut cfg = rest.clone();
                    let mut r = row;
                    for (&s, &d) in u.sites.iter().zip(&dims).rev() {
                        cfg[s] = (r % d as usize) as u16;
                        r /= d as usize;
                    }
                    out.insert(cfg, v);
                }
            }
        }
        SparseState::from_map(layout, out)
    }
}

/// A small fixed gate menu used by adversary scenarios.
pub mod gates {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    pub fn identity(dim: usize) -> DMatrix<Complex64> {
        DMatrix::identity(dim, dim)
    }

    pub fn hadamard() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)])
    }

    pub fn pauli_x() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    pub fn pauli_z() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
    }

    /// Haar-ish random unitary from the QR decomposition of a complex
    /// Gaussian-like matrix driven by `next` (uniform draws in [0,1)).
    pub fn random_unitary(dim: usize, mut next: impl FnMut() -> f64) -> DMatrix<Complex64> {
        let m = DMatrix::from_fn(dim, dim, |_, _| {
            // Box-Muller
            let (u1, u2) = (next().max(1e-300), next());
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            Complex64::new(r * t.cos(), r * t.sin())
        });
        let qr = m.qr();
        let (q, r) = (qr.q(), qr.r());
        // Fix column phases so the distribution does not depend on the QR convention.
        let phases = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                let d = r[(i, i)];
                if d.norm() > 0.0 { d / d.norm() } else { c(1.0) }
            } else {
                c(0.0)
            }
        });
        q * phases
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::RegisterLayout;

    #[test]
    fn hadamard_on_zero() {
        let mut l = RegisterLayout::new();
        l.add("q", 1, 2).unwrap();
        let s = SparseState::zero(l)
            .apply_dense_unitary(&DenseUnitary::new(vec![0], gates::hadamard()).unwrap())
            .unwrap();
        assert!((s.amplitude(&[0]).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.amplitude(&[1]).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn identity_unchanged_and_errors() {
        let mut l = RegisterLayout::new();
        l.add("q", 2, 2).unwrap();
        let s = SparseState::basis(l, vec![1, 0]).unwrap();
        let id = DenseUnitary::new(vec![0, 1], gates::identity(4)).unwrap();
        assert_eq!(s.clone().apply_dense_unitary(&id).unwrap(), s);
        assert!(matches!(
            s.clone().apply_dense_unitary_capped(&id, 2),
            Err(StateError::DenseCapExceeded { dim: 4, cap: 2 })
        ));
        let not_u = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(DenseUnitary::new(vec![0], not_u), Err(StateError::NotUnitary(_))));
    }
}
