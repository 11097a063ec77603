use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::index::{DickeIndex, HalfInt};
use crate::error::{Error, Result};

/// An exact, arbitrary-precision count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub BigUint);

impl BigCount {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Nearest `f64`; infinite past the `f64` range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl PartialEq<u64> for BigCount {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

/// `n choose k` by the multiplicative recurrence; every partial product is an
/// exact binomial so the division never truncates.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// Number of independent ladders (`alpha` labels) with cooperation number `j`:
/// `N! (2j+1) / ((N/2+j+1)! (N/2-j)!)`.
pub fn degeneracy_dj(n: u32, j: HalfInt) -> Result<BigCount> {
    DickeIndex::new(n, j, j)?;
    let k = (n as i64 - j.doubled()) / 2; // N/2 - j
    let n = n as u64;
    let k = k as u64;
    let value = binomial(n, k) * (n - 2 * k + 1) / (n - k + 1);
    Ok(BigCount(value))
}

/// Number of product states with `J_z = m`: `N choose (N/2 + m)`.
pub fn degeneracy_dm(n: u32, m: HalfInt) -> Result<BigCount> {
    let (n2, m2) = (n as i64, m.doubled());
    if n == 0 || m2.abs() > n2 || (n2 - m2) % 2 != 0 {
        return Err(Error::Domain(format!("m = {m} is not allowed for N = {n}")));
    }
    Ok(BigCount(binomial(n as u64, ((n2 + m2) / 2) as u64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(degeneracy_dj(4, HalfInt::from_int(2)).unwrap(), 1);
        assert_eq!(degeneracy_dj(4, HalfInt::ONE).unwrap(), 3);
        assert_eq!(degeneracy_dj(4, HalfInt::ZERO).unwrap(), 2);
        assert_eq!(degeneracy_dj(3, HalfInt::HALF).unwrap(), 2);
        assert_eq!(degeneracy_dm(4, HalfInt::ZERO).unwrap(), 6);
        assert_eq!(degeneracy_dm(6, HalfInt::ONE).unwrap(), 15);
        for n in 1..20 {
            assert_eq!(degeneracy_dj(n, HalfInt::half_of(n)).unwrap(), 1);
            assert_eq!(degeneracy_dm(n, HalfInt::half_of(n)).unwrap(), 1);
            // one-excitation dark ladder
            if n >= 2 {
                let j = HalfInt::half_of(n) - HalfInt::ONE;
                assert_eq!(degeneracy_dj(n, j).unwrap(), (n - 1) as u64);
            }
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(degeneracy_dj(4, HalfInt::HALF).is_err());
        assert!(degeneracy_dj(4, HalfInt::from_int(3)).is_err());
        assert!(degeneracy_dm(4, HalfInt::HALF).is_err());
        assert!(degeneracy_dm(4, HalfInt::from_int(-3)).is_err());
    }

    #[test]
    fn beyond_u64() {
        // 100! overflows every machine integer; D_j at N = 100 still exact.
        let d = degeneracy_dj(100, HalfInt::ZERO).unwrap();
        assert_eq!(
            d.to_string(),
            "1978261657756160653623774456" // Catalan number C_50
        );
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![BigUint::one()];
        for n in 1..70u64 {
            let mut next = vec![BigUint::one(); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial(n, k), row[k as usize]);
            }
        }
    }
}
