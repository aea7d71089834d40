//! Arithmetic over a prime field `F_q`, enough for evaluating the
//! polynomials behind the Reed–Solomon selector.

use crate::error::{Error, Result};

/// Deterministic trial-division primality test.
pub fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x.is_multiple_of(2) {
        return x == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `>= x`.
pub fn next_prime(x: u64) -> u64 {
    let mut p = x.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidParams(format!("modulus {q} is not prime")));
        }
        Ok(PrimeField { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.q - b % self.q) % self.q
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    /// Horner evaluation; `coeffs[j]` multiplies `x^j`.
    pub fn eval(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..60).filter(|&x| is_prime(x)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(4001));
        assert!(!is_prime(4003 * 4007));
        assert_eq!(next_prime(48), 53);
        assert_eq!(next_prime(0), 2);
    }

    #[test]
    fn field_ops() {
        let f = PrimeField::new(17).unwrap();
        assert_eq!(f.add(16, 5), 4);
        assert_eq!(f.sub(3, 5), 15);
        assert_eq!(f.mul(5, 7), 1);
        // 2 + 3x + x^2 at x = 4: 2 + 12 + 16 = 30 = 13 (mod 17)
        assert_eq!(f.eval(&[2, 3, 1], 4), 13);
        assert_eq!(f.eval(&[], 4), 0);
        assert!(PrimeField::new(15).is_err());
    }
}
