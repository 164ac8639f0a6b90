use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SparseState;

/// Singular values at or below this count as zero.
pub const SCHMIDT_TOLERANCE: f64 = 1e-9;

/// Schmidt rank of `state` across the cut `left | everything else`.
pub fn schmidt_rank(state: &SparseState, left: &[usize]) -> usize {
    let total = state.layout().total_sites();
    let in_left: Vec<bool> = (0..total).map(|s| left.contains(&s)).collect();
    let mut rows: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    let mut cols: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(state.support_len());
    for (cfg, a) in state.amplitudes() {
        let l: Vec<u16> = left.iter().map(|&s| cfg[s]).collect();
        let r: Vec<u16> = (0..total).filter(|&s| !in_left[s]).map(|s| cfg[s]).collect();
        let nr = rows.len();
        let i = *rows.entry(l).or_insert(nr);
        let nc = cols.len();
        let j = *cols.entry(r).or_insert(nc);
        entries.push((i, j, *a));
    }
    if rows.len() <= 1 || cols.len() <= 1 {
        return usize::from(!entries.is_empty());
    }
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for (i, j, a) in entries {
        m[(i, j)] = a;
    }
    m.singular_values().iter().filter(|&&s| s > SCHMIDT_TOLERANCE).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{ClassicalDistribution, FunctionAdd, RegisterLayout};

    fn two_bits() -> SparseState {
        let mut l = RegisterLayout::new();
        l.add("a", 1, 2).unwrap();
        l.add("b", 1, 2).unwrap();
        SparseState::zero(l)
            .prepare_distribution("a", &ClassicalDistribution::uniform(2))
            .unwrap()
    }

    #[test]
    fn product_has_rank_one() {
        let s = two_bits().prepare_distribution("b", &ClassicalDistribution::uniform(2)).unwrap();
        assert_eq!(schmidt_rank(&s, &[0]), 1);
    }

    #[test]
    fn bell_has_rank_two() {
        let s = two_bits()
            .apply_permutation(&FunctionAdd::new(vec![0], vec![1], vec![2], |v| vec![v[0]]))
            .unwrap();
        assert_eq!(schmidt_rank(&s, &[0]), 2);
        assert_eq!(schmidt_rank(&s, &[1]), 2);
    }
}
