use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integer or half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_doubled(doubled: i64) -> Self {
        HalfInt(doubled)
    }

    pub const fn from_int(value: i64) -> Self {
        HalfInt(2 * value)
    }

    /// `N/2` for a system of `n` spins.
    pub const fn half_of(n: u32) -> Self {
        HalfInt(n as i64)
    }

    pub const fn doubled(self) -> i64 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// The value as an integer, when it is one.
    pub fn to_int(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `3`, `-3/2` and `1.5` style spellings.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("`{s}` is not an integer or half-integer"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "1" => Ok(HalfInt::from_int(num)),
                "2" => Ok(HalfInt(num)),
                _ => Err(bad()),
            }
        } else if let Ok(v) = s.parse::<i64>() {
            Ok(HalfInt::from_int(v))
        } else {
            let v: f64 = s.parse().map_err(|_| bad())?;
            let doubled = 2.0 * v;
            if doubled.fract() != 0.0 || !doubled.is_finite() {
                return Err(bad());
            }
            Ok(HalfInt(doubled as i64))
        }
    }
}

/// A point `(j, m)` of the Dicke triangle.
///
/// Validity depends on the ensemble size, so construction goes through
/// [`DickeIndex::new`]. Serialized as the pair of doubled integers `(2j, 2m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DickeIndex {
    pub j: HalfInt,
    pub m: HalfInt,
}

impl DickeIndex {
    pub fn new(n: u32, j: HalfInt, m: HalfInt) -> Result<Self> {
        let idx = DickeIndex { j, m };
        idx.check(n)?;
        Ok(idx)
    }

    pub fn check(&self, n: u32) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("ensemble size must be at least 1".into()));
        }
        let (j2, m2) = (self.j.doubled(), self.m.doubled());
        let n2 = n as i64;
        if j2 < 0 || j2 > n2 || (n2 - j2) % 2 != 0 {
            return Err(Error::Domain(format!(
                "j = {} is not a cooperation number for N = {n}",
                self.j
            )));
        }
        if m2.abs() > j2 || (j2 - m2) % 2 != 0 {
            return Err(Error::Domain(format!(
                "m = {} is not allowed for j = {}",
                self.m, self.j
            )));
        }
        Ok(())
    }

    /// Top of the symmetric ladder, `|N/2, N/2>`.
    pub fn excited(n: u32) -> Self {
        let h = HalfInt::half_of(n);
        DickeIndex { j: h, m: h }
    }

    /// Ground state, `|N/2, -N/2>`.
    pub fn ground(n: u32) -> Self {
        let h = HalfInt::half_of(n);
        DickeIndex { j: h, m: -h }
    }

    pub fn jf(&self) -> f64 {
        self.j.value()
    }

    pub fn mf(&self) -> f64 {
        self.m.value()
    }
}

impl fmt::Display for DickeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}, {}>", self.j, self.m)
    }
}

impl Serialize for DickeIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.j.doubled(), self.m.doubled()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DickeIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (j2, m2) = <(i64, i64)>::deserialize(d)?;
        Ok(DickeIndex {
            j: HalfInt::from_doubled(j2),
            m: HalfInt::from_doubled(m2),
        })
    }
}

/// Smallest cooperation number for `n` spins.
pub fn j_min(n: u32) -> HalfInt {
    HalfInt::from_doubled((n % 2) as i64)
}

/// Every `(j, m)` for `n` spins, by descending `j` then descending `m`.
pub fn enumerate_dicke_space(n: u32) -> Result<Vec<DickeIndex>> {
    if n == 0 {
        return Err(Error::Domain("ensemble size must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(dicke_space_len(n));
    let mut j2 = n as i64;
    while j2 >= 0 {
        let mut m2 = j2;
        while m2 >= -j2 {
            out.push(DickeIndex {
                j: HalfInt::from_doubled(j2),
                m: HalfInt::from_doubled(m2),
            });
            m2 -= 2;
        }
        j2 -= 2;
    }
    Ok(out)
}

/// Position of `idx` in [`enumerate_dicke_space`] order.
pub fn dicke_position(n: u32, idx: DickeIndex) -> usize {
    let (top, j2, m2) = (n as i64, idx.j.doubled(), idx.m.doubled());
    // blocks above j hold sum over J2 = j2+2, j2+4, ..., top of (J2 + 1) states
    let blocks = (top - j2) / 2;
    let above = blocks * (j2 + 2) + blocks * (blocks - 1) + blocks;
    (above + (j2 - m2) / 2) as usize
}

/// Number of `(j, m)` pairs, `sum_j (2j + 1)`.
pub fn dicke_space_len(n: u32) -> usize {
    let n = n as usize;
    if n.is_multiple_of(2) {
        (n / 2 + 1) * (n / 2 + 1)
    } else {
        (n + 1) * (n + 3) / 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(j2: i64, m2: i64) -> DickeIndex {
        DickeIndex {
            j: HalfInt::from_doubled(j2),
            m: HalfInt::from_doubled(m2),
        }
    }

    #[test]
    fn small_spaces() {
        assert_eq!(enumerate_dicke_space(1).unwrap(), vec![idx(1, 1), idx(1, -1)]);
        assert_eq!(
            enumerate_dicke_space(2).unwrap(),
            vec![idx(2, 2), idx(2, 0), idx(2, -2), idx(0, 0)]
        );
        let four = enumerate_dicke_space(4).unwrap();
        assert_eq!(four.len(), 9);
        let per_j = |j2| four.iter().filter(|d| d.j.doubled() == j2).count();
        assert_eq!((per_j(4), per_j(2), per_j(0)), (5, 3, 1));
    }

    #[test]
    fn positions_follow_enumeration() {
        for n in 1..=25 {
            for (k, d) in enumerate_dicke_space(n).unwrap().into_iter().enumerate() {
                assert_eq!(dicke_position(n, d), k);
            }
        }
    }

    #[test]
    fn zero_spins_rejected() {
        assert!(enumerate_dicke_space(0).is_err());
    }

    #[test]
    fn length_formula_matches_enumeration() {
        for n in 1..40 {
            let space = enumerate_dicke_space(n).unwrap();
            assert_eq!(space.len(), dicke_space_len(n));
            assert!(space.iter().all(|d| d.check(n).is_ok()));
        }
    }

    #[test]
    fn validity_rules() {
        assert!(DickeIndex::new(4, HalfInt::ONE, HalfInt::ONE).is_ok());
        assert!(DickeIndex::new(4, HalfInt::HALF, HalfInt::HALF).is_err());
        assert!(DickeIndex::new(4, HalfInt::ONE, HalfInt::from_int(2)).is_err());
        assert!(DickeIndex::new(3, HalfInt::from_doubled(3), HalfInt::HALF).is_ok());
        assert!(DickeIndex::new(3, HalfInt::from_doubled(5), HalfInt::HALF).is_err());
    }

    #[test]
    fn parse_half_integers() {
        assert_eq!("3/2".parse::<HalfInt>().unwrap(), HalfInt::from_doubled(3));
        assert_eq!("-1/2".parse::<HalfInt>().unwrap(), HalfInt::from_doubled(-1));
        assert_eq!("2".parse::<HalfInt>().unwrap(), HalfInt::from_int(2));
        assert_eq!("-2.5".parse::<HalfInt>().unwrap(), HalfInt::from_doubled(-5));
        assert!("0.25".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::from_doubled(-3).to_string(), "-3/2");
    }

    #[test]
    fn serde_uses_doubled_pair() {
        let d = idx(5, -3);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[5,-3]");
        assert_eq!(serde_json::from_str::<DickeIndex>(&s).unwrap(), d);
    }
}
