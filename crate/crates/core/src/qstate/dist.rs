use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, StateError};

/// A finite probability distribution over register values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    support: BTreeMap<u64, f64>,
}

impl ClassicalDistribution {
    /// Builds a distribution, dropping zero-weight entries. Probabilities must
    /// be nonnegative and sum to one within 1e-12.
    pub fn new(entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut support = BTreeMap::new();
        for (v, p) in entries {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(StateError::BadDistribution(format!("probability {p} for value {v}")));
            }
            if p > 0.0 {
                *support.entry(v).or_insert(0.0) += p;
            }
        }
        let total: f64 = support.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(StateError::BadDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { support })
    }

    pub fn point(value: u64) -> Self {
        Self { support: BTreeMap::from([(value, 1.0)]) }
    }

    pub fn uniform(size: u64) -> Self {
        assert!(size > 0);
        let p = 1.0 / size as f64;
        Self { support: (0..size).map(|v| (v, p)).collect() }
    }

    /// `{0: p0, 1: 1 - p0}`.
    pub fn bernoulli_zero(p0: f64) -> Result<Self> {
        Self::new([(0, p0), (1, 1.0 - p0)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.support.iter().map(|(&v, &p)| (v, p))
    }

    pub fn prob(&self, value: u64) -> f64 {
        self.support.get(&value).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_point_mass(&self) -> bool {
        self.support.len() == 1
    }

    pub fn max_value(&self) -> u64 {
        self.support.keys().next_back().copied().unwrap_or(0)
    }

    /// Inverse-CDF sample from a uniform draw in [0, 1).
    pub fn sample_with(&self, u: f64) -> u64 {
        let mut acc = 0.0;
        for (&v, &p) in &self.support {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.max_value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_mass() {
        assert!(ClassicalDistribution::new([(0, 0.5), (1, 0.4)]).is_err());
        assert!(ClassicalDistribution::new([(0, -0.1), (1, 1.1)]).is_err());
        let d = ClassicalDistribution::new([(0, 0.25), (1, 0.75), (2, 0.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.sample_with(0.1), 0);
        assert_eq!(d.sample_with(0.9), 1);
    }
}
