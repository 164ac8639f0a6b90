use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Result, StateError};

/// One value per site, each below that site's dimension.
pub type BasisConfig = Vec<u16>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub sites: usize,
    /// Dimension of each site.
    pub dims: Vec<u16>,
    pub offset: usize,
}

impl Register {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.sites
    }

    /// Number of distinct values the register can hold.
    pub fn capacity(&self) -> u64 {
        self.dims.iter().fold(1u64, |acc, &d| acc.saturating_mul(d as u64))
    }

    /// Mixed-radix digits of `value`, most significant site first.
    pub fn encode(&self, value: u64) -> Result<Vec<u16>> {
        if value >= self.capacity() {
            return Err(StateError::ValueTooLarge {
                register: self.name.clone(),
                value,
                capacity: self.capacity(),
            });
        }
        let mut digits = vec![0u16; self.sites];
        let mut v = value;
        for (d, &dim) in digits.iter_mut().zip(&self.dims).rev() {
            *d = (v % dim as u64) as u16;
            v /= dim as u64;
        }
        Ok(digits)
    }

    pub fn decode(&self, digits: &[u16]) -> u64 {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0u64, |acc, (&d, &dim)| acc * dim as u64 + d as u64)
    }
}

/// Ordered list of named registers. Sites are numbered contiguously in
/// registration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    index: HashMap<String, usize>,
    dims: Vec<u16>,
}

impl RegisterLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, sites: usize, dim: u16) -> Result<&Register> {
        if sites == 0 || dim < 2 {
            return Err(StateError::BadRegisterShape { sites, dim });
        }
        self.add_mixed(name, vec![dim; sites])
    }

    /// Register whose sites have individual dimensions.
    pub fn add_mixed(&mut self, name: impl Into<String>, dims: Vec<u16>) -> Result<&Register> {
        let name = name.into();
        if let Some(&bad) = dims.iter().find(|&&d| d < 2) {
            return Err(StateError::BadRegisterShape { sites: dims.len(), dim: bad });
        }
        if dims.is_empty() {
            return Err(StateError::BadRegisterShape { sites: 0, dim: 0 });
        }
        if self.index.contains_key(&name) {
            return Err(StateError::DuplicateRegister(name));
        }
        let reg = Register { name: name.clone(), sites: dims.len(), dims: dims.clone(), offset: self.dims.len() };
        self.dims.extend(dims);
        self.index.insert(name, self.registers.len());
        self.registers.push(reg);
        Ok(self.registers.last().unwrap())
    }

    pub fn get(&self, name: &str) -> Result<&Register> {
        self.index
            .get(name)
            .map(|&i| &self.registers[i])
            .ok_or_else(|| StateError::UnknownRegister(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u16] {
        &self.dims
    }

    pub fn dim(&self, site: usize) -> u16 {
        self.dims[site]
    }

    /// Sites of the named registers, concatenated in the given order.
    pub fn sites_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for n in names {
            out.extend(self.get(n.as_ref())?.range());
        }
        Ok(out)
    }

    /// The register owning `site`.
    pub fn owner(&self, site: usize) -> Option<&Register> {
        self.registers.iter().find(|r| r.range().contains(&site))
    }

    pub fn check_config(&self, config: &[u16]) -> Result<()> {
        if config.len() != self.dims.len() {
            return Err(StateError::SiteOutOfRange(config.len()));
        }
        for (site, (&v, &d)) in config.iter().zip(&self.dims).enumerate() {
            if v >= d {
                return Err(StateError::ValueOutOfRange { site, value: v, dim: d });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_contiguous() {
        let mut l = RegisterLayout::new();
        l.add("a", 2, 2).unwrap();
        l.add("b", 3, 5).unwrap();
        assert_eq!(l.total_sites(), 5);
        assert_eq!(l.get("b").unwrap().range(), 2..5);
        assert_eq!(l.sites_of(&["b", "a"]).unwrap(), vec![2, 3, 4, 0, 1]);
        assert_eq!(l.owner(3).unwrap().name, "b");
    }

    #[test]
    fn rejects_bad_shapes_and_duplicates() {
        let mut l = RegisterLayout::new();
        assert!(l.add("a", 0, 2).is_err());
        assert!(l.add("a", 1, 1).is_err());
        l.add("a", 1, 2).unwrap();
        assert_eq!(l.add("a", 1, 2).unwrap_err(), StateError::DuplicateRegister("a".into()));
    }

    #[test]
    fn encode_decode_mixed_radix() {
        let r = Register { name: "x".into(), sites: 3, dims: vec![5; 3], offset: 0 };
        assert_eq!(r.encode(7).unwrap(), vec![0, 1, 2]);
        assert_eq!(r.decode(&[0, 1, 2]), 7);
        assert!(r.encode(125).is_err());
        let m = Register { name: "m".into(), sites: 2, dims: vec![2, 3], offset: 0 };
        assert_eq!(m.capacity(), 6);
        assert_eq!(m.encode(5).unwrap(), vec![1, 2]);
    }
}
