//! Prime-field arithmetic for small primes.

/// Integers modulo a prime `p < 2^15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    /// `None` unless `p` is a prime below `2^15`.
    pub fn new(p: u32) -> Option<Self> {
        let prime = p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
        (prime && p < (1 << 15)).then_some(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        (a + self.p - b % self.p) % self.p
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a * b) % self.p
    }

    pub fn pow(&self, a: u32, mut e: u32) -> u32 {
        let (mut base, mut acc) = (a % self.p, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `a` must be nonzero.
    pub fn inv(&self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "zero has no inverse");
        self.pow(a, self.p - 2)
    }

    /// `sum_k coeffs[k] x^k`.
    pub fn eval(&self, coeffs: &[u32], x: u32) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    /// Value at 0 of the polynomial through `points`, which need distinct `x`.
    pub fn interpolate_at_zero(&self, points: &[(u32, u32)]) -> u32 {
        let mut total = 0;
        for (i, &(xi, yi)) in points.iter().enumerate() {
            let mut num = 1;
            let mut den = 1;
            for (j, &(xj, _)) in points.iter().enumerate() {
                if i != j {
                    num = self.mul(num, self.sub(0, xj));
                    den = self.mul(den, self.sub(xi, xj));
                }
            }
            total = self.add(total, self.mul(yi, self.mul(num, self.inv(den))));
        }
        total
    }

    /// Coefficients (low degree first) of the polynomial of degree
    /// `< points.len()` through `points`.
    pub fn interpolate(&self, points: &[(u32, u32)]) -> Vec<u32> {
        let k = points.len();
        let mut out = vec![0; k];
        for (i, &(xi, yi)) in points.iter().enumerate() {
            // basis polynomial prod_{j != i} (x - xj) / (xi - xj)
            let mut basis = vec![1u32];
            let mut den = 1;
            for (j, &(xj, _)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut next = vec![0; basis.len() + 1];
                for (d, &c) in basis.iter().enumerate() {
                    next[d + 1] = self.add(next[d + 1], c);
                    next[d] = self.add(next[d], self.mul(c, self.sub(0, xj)));
                }
                basis = next;
                den = self.mul(den, self.sub(xi, xj));
            }
            let scale = self.mul(yi, self.inv(den));
            for (d, &c) in basis.iter().enumerate() {
                out[d] = self.add(out[d], self.mul(c, scale));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites() {
        assert!(PrimeField::new(4).is_none());
        assert!(PrimeField::new(1).is_none());
        assert!(PrimeField::new(17).is_some());
    }

    #[test]
    fn inverses_mod_seven() {
        let f = PrimeField::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn line_through_two_points() {
        let f = PrimeField::new(5).unwrap();
        // y = 3x + 2
        let pts = [(1, 0), (2, 3)];
        assert_eq!(f.interpolate_at_zero(&pts), 2);
        assert_eq!(f.interpolate(&pts), vec![2, 3]);
    }
}
