//! Exact polynomials in the commuting collective invariants `C = J^2` and
//! `Z = Jz`, with coefficients that are rational polynomials in `N`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Polynomial in `N` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default, PartialOrd, Ord)]
pub struct NPoly(BTreeMap<u32, Rational>);

impl NPoly {
    pub fn zero() -> Self {
        NPoly(BTreeMap::new())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = NPoly::zero();
        p.add_term(0, c);
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rational(c, 1))
    }

    /// `a N + b`.
    pub fn linear(a: Rational, b: Rational) -> Self {
        let mut p = NPoly::constant(b);
        p.add_term(1, a);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    fn add_term(&mut self, power: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.0.entry(power).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.0.remove(&power);
        }
    }

    pub fn add(&self, other: &NPoly) -> NPoly {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.add_term(*k, v.clone());
        }
        out
    }

    pub fn mul(&self, other: &NPoly) -> NPoly {
        let mut out = NPoly::zero();
        for (ka, va) in &self.0 {
            for (kb, vb) in &other.0 {
                out.add_term(ka + kb, va * vb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> NPoly {
        let mut out = NPoly::zero();
        for (k, v) in &self.0 {
            out.add_term(*k, v * c);
        }
        out
    }

    /// Exact value at a rational `N`.
    pub fn eval_exact(&self, n: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for (k, v) in self.0.iter().rev() {
            let mut term = v.clone();
            for _ in 0..*k {
                term *= n;
            }
            acc += term;
        }
        acc
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.0
            .iter()
            .map(|(k, v)| v.to_f64().unwrap_or(f64::NAN) * n.powi(*k as i32))
            .sum()
    }
}

impl fmt::Display for NPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, v) in self.0.iter().rev() {
            let neg = v.is_negative();
            let mag = v.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_coeff = *k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "{}N", if show_coeff { " " } else { "" })?,
                _ => write!(f, "{}N^{k}", if show_coeff { " " } else { "" })?,
            }
        }
        Ok(())
    }
}

/// The monomial `C^c Z^z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Mono {
    pub c: u32,
    pub z: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { c: 0, z: 0 };
    pub const Z: Mono = Mono { c: 0, z: 1 };
    pub const C: Mono = Mono { c: 1, z: 0 };

    pub const fn new(c: u32, z: u32) -> Self {
        Mono { c, z }
    }

    /// Operator order, counting `J^2` as two.
    pub fn order(self) -> u32 {
        2 * self.c + self.z
    }

    pub fn mul(self, other: Mono) -> Mono {
        Mono {
            c: self.c + other.c,
            z: self.z + other.z,
        }
    }

    /// Value on a state with `J^2 = c` and `Jz = z` (a single Dicke state).
    pub fn eval(self, c: f64, z: f64) -> f64 {
        c.powi(self.c as i32) * z.powi(self.z as i32)
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.c {
            0 => {}
            1 => parts.push("J2".to_string()),
            c => parts.push(format!("J2^{c}")),
        }
        match self.z {
            0 => {}
            1 => parts.push("Jz".to_string()),
            z => parts.push(format!("Jz^{z}")),
        }
        if parts.is_empty() {
            write!(f, "<1>")
        } else {
            write!(f, "<{}>", parts.join(" "))
        }
    }
}

/// Polynomial in `C` and `Z` with `NPoly` coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CzPoly(BTreeMap<Mono, NPoly>);

impl CzPoly {
    pub fn zero() -> Self {
        CzPoly(BTreeMap::new())
    }

    pub fn mono(m: Mono) -> Self {
        Self::term(m, NPoly::int(1))
    }

    pub fn term(m: Mono, c: NPoly) -> Self {
        let mut p = CzPoly::zero();
        p.add_term(m, c);
        p
    }

    pub fn constant(c: NPoly) -> Self {
        Self::term(Mono::ONE, c)
    }

    /// `Z - shift` to the first power.
    pub fn z_minus(shift: i64) -> Self {
        let mut p = Self::mono(Mono::Z);
        p.add_term(Mono::ONE, NPoly::int(-shift));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mono, &NPoly)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn coefficient(&self, m: Mono) -> NPoly {
        self.0.get(&m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Mono, c: NPoly) {
        if c.is_zero() {
            return;
        }
        let entry = self.0.entry(m).or_default();
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn add(&self, other: &CzPoly) -> CzPoly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &CzPoly) -> CzPoly {
        self.add(&other.scale(&rational(-1, 1)))
    }

    pub fn mul(&self, other: &CzPoly) -> CzPoly {
        let mut out = CzPoly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.add_term(ma.mul(*mb), ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> CzPoly {
        self.scale_n(&NPoly::constant(c.clone()))
    }

    pub fn scale_n(&self, c: &NPoly) -> CzPoly {
        let mut out = CzPoly::zero();
        for (m, v) in &self.0 {
            out.add_term(*m, v.mul(c));
        }
        out
    }

    pub fn pow(&self, e: u32) -> CzPoly {
        let mut out = CzPoly::constant(NPoly::int(1));
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes `Z -> Z - k`.
    pub fn shift_z(&self, k: i64) -> CzPoly {
        let shifted = CzPoly::z_minus(k);
        let mut out = CzPoly::zero();
        for (m, v) in &self.0 {
            let part = CzPoly::term(Mono::new(m.c, 0), v.clone()).mul(&shifted.pow(m.z));
            out = out.add(&part);
        }
        out
    }

    /// Highest power of `C` present.
    pub fn c_degree(&self) -> Option<u32> {
        self.0.keys().map(|m| m.c).max()
    }

    /// Value with `N`, `C` and `Z` substituted.
    pub fn eval(&self, n: f64, c: f64, z: f64) -> f64 {
        self.0.iter().map(|(m, v)| v.eval(n) * m.eval(c, z)).sum()
    }
}

impl fmt::Display for CzPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(m, c)| format!("({c}) {m}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}
