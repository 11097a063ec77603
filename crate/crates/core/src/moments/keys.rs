//! Normal-ordered moments `<J+^p Jz^r J-^q>` and their balanced (`p = q`)
//! reduction to polynomials in `J^2` and `Jz`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::poly::{rational, CzPoly, Mono, NPoly};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MomentKey {
    pub p: u32,
    pub r: u32,
    pub q: u32,
}

impl MomentKey {
    pub const fn new(p: u32, r: u32, q: u32) -> Self {
        MomentKey { p, r, q }
    }

    pub fn order(self) -> u32 {
        self.p + self.r + self.q
    }

    pub fn is_balanced(self) -> bool {
        self.p == self.q
    }

    /// Value on `|j, m>`: `(m-p)^r prod_{k<p} (j+m-k)(j-m+k+1)`.
    pub fn eval_dicke(self, j: f64, m: f64) -> f64 {
        if !self.is_balanced() {
            return 0.0;
        }
        let mut v = (m - self.p as f64).powi(self.r as i32);
        for k in 0..self.p {
            let k = k as f64;
            v *= (j + m - k) * (j - m + k + 1.0);
        }
        v
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<J+^{} Jz^{} J-^{}>", self.p, self.r, self.q)
    }
}

/// `J+^k J-^k = prod_{i<k} (C - (Z-i)(Z-i-1))`.
pub fn raise_lower_block(k: u32) -> CzPoly {
    let mut out = CzPoly::constant(NPoly::int(1));
    for i in 0..k as i64 {
        let factor = CzPoly::mono(Mono::C).sub(&CzPoly::z_minus(i).mul(&CzPoly::z_minus(i + 1)));
        out = out.mul(&factor);
    }
    out
}

/// `J+^k f(Jz) J-^k = (J+^k J-^k) f(Jz - k)` for a polynomial `f` in `Jz` alone.
pub fn sandwich(k: u32, f: &CzPoly) -> CzPoly {
    debug_assert!(f.c_degree().unwrap_or(0) == 0);
    raise_lower_block(k).mul(&f.shift_z(k as i64))
}

pub fn key_to_cz(key: MomentKey) -> Result<CzPoly> {
    if !key.is_balanced() {
        return Err(Error::Unsupported(format!(
            "{key} is not balanced and has no expression in J^2 and Jz"
        )));
    }
    Ok(sandwich(key.p, &CzPoly::mono(Mono::Z).pow(key.r)))
}

/// Writes a `(C, Z)` polynomial as a combination of balanced keys.
///
/// `key(a, b, a)` has leading `C^a` coefficient `(Z - a)^b`, so peeling off the
/// highest power of `C` at a time terminates.
pub fn cz_to_keys(poly: &CzPoly) -> Vec<(MomentKey, NPoly)> {
    let mut rest = poly.clone();
    let mut out = Vec::new();
    while let Some(a) = rest.c_degree() {
        // g(Z) = coefficient of C^a; write g(Z) = sum_b c_b (Z - a)^b
        let mut g = CzPoly::zero();
        for (m, c) in rest.terms() {
            if m.c == a {
                g.add_term(Mono::new(0, m.z), c.clone());
            }
        }
        let shifted = g.shift_z(-(a as i64));
        for (m, c) in shifted.terms() {
            let key = MomentKey::new(a, m.z, a);
            let expansion = key_to_cz(key).expect("balanced").scale_n(c);
            rest = rest.sub(&expansion);
            out.push((key, c.clone()));
        }
    }
    out.sort_by_key(|x| x.0);
    out
}

/// `N/2 + Z`.
pub fn half_n_plus_z() -> CzPoly {
    CzPoly::mono(Mono::Z).add(&CzPoly::constant(NPoly::linear(rational(1, 2), rational(0, 1))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_evaluate_consistently() {
        for key in [
            MomentKey::new(0, 1, 0),
            MomentKey::new(1, 0, 1),
            MomentKey::new(2, 1, 2),
            MomentKey::new(1, 3, 1),
            MomentKey::new(3, 0, 3),
        ] {
            let cz = key_to_cz(key).unwrap();
            for &(j, m) in &[(2.5, 1.5), (3.0, -2.0), (7.0, 0.0), (0.5, -0.5)] {
                let direct = key.eval_dicke(j, m);
                let via = cz.eval(0.0, j * (j + 1.0), m);
                assert!((direct - via).abs() < 1e-9 * (1.0 + direct.abs()), "{key} at ({j},{m})");
            }
        }
    }

    #[test]
    fn j_plus_j_minus() {
        // J+J- = J^2 - Jz^2 + Jz
        let expected = CzPoly::mono(Mono::C)
            .sub(&CzPoly::mono(Mono::new(0, 2)))
            .add(&CzPoly::mono(Mono::Z));
        assert_eq!(key_to_cz(MomentKey::new(1, 0, 1)).unwrap(), expected);
    }

    #[test]
    fn round_trip_through_keys() {
        for c in 0..3 {
            for z in 0..4 {
                let poly = CzPoly::mono(Mono::new(c, z));
                let keys = cz_to_keys(&poly);
                let mut back = CzPoly::zero();
                for (k, coef) in keys {
                    back = back.add(&key_to_cz(k).unwrap().scale_n(&coef));
                }
                assert_eq!(back, poly);
            }
        }
    }

    #[test]
    fn unbalanced_rejected() {
        assert!(key_to_cz(MomentKey::new(1, 0, 0)).is_err());
    }
}
