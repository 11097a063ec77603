//! Mechanical expansion of the moment hierarchy with a pluggable closure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_traits::{One, Signed};

use super::keys::{cz_to_keys, half_n_plus_z, key_to_cz, sandwich, MomentKey};
use super::poly::{rational, CzPoly, Mono, NPoly};
use crate::error::{Error, Result};
use crate::rates::{Channel, RateSet};

/// Per-channel polynomials, indexed like [`Channel::ALL`].
pub type ChannelPolys = [CzPoly; 3];

fn channel_slot(c: Channel) -> usize {
    match c {
        Channel::S => 0,
        Channel::L => 1,
        Channel::D => 2,
    }
}

/// Unclosed `d<key>/dt` for a balanced key, split by channel and written in
/// `J^2` and `Jz`. The `omega0` term carries `(q - p)` and vanishes here.
pub fn key_derivative(key: MomentKey) -> Result<ChannelPolys> {
    let this = key_to_cz(key)?;
    let (p, r) = (key.p, key.r);
    let z = CzPoly::mono(Mono::Z);
    let z_r = z.pow(r);
    let z_r1 = z.pow(r + 1);
    let z_minus_1_r = CzPoly::z_minus(1).pow(r);
    let z_plus_1_r = CzPoly::z_minus(-1).pow(r);
    let pf = p as i64;

    let mut s = sandwich(p + 1, &z_r).sub(&sandwich(p + 1, &z_plus_1_r));
    s = s.add(&sandwich(p, &z_r1).scale(&rational(2 * pf, 1)));
    s = s.add(&this.scale(&rational(pf * (pf - 1), 1)));

    let mut l = sandwich(p, &z_minus_1_r.mul(&half_n_plus_z()));
    l = l.sub(&this.scale_n(&NPoly::linear(rational(1, 2), rational(pf, 1))));
    l = l.sub(&sandwich(p, &z_r1));

    let mut d = this.scale(&rational(-pf, 1));
    if p > 0 {
        let inner = z_minus_1_r.mul(&half_n_plus_z());
        d = d.add(&sandwich(p - 1, &inner).scale(&rational(pf * pf, 1)));
    }
    Ok([s, l, d])
}

/// Unclosed `d<C^a Z^b>/dt`, by channel.
pub fn monomial_derivative(m: Mono) -> Result<ChannelPolys> {
    let mut out: ChannelPolys = Default::default();
    for (key, coef) in cz_to_keys(&CzPoly::mono(m)) {
        let parts = key_derivative(key)?;
        for (acc, part) in out.iter_mut().zip(parts) {
            *acc = acc.add(&part.scale_n(&coef));
        }
    }
    Ok(out)
}

/// The monomials followed at order `K`: every `J2^a Jz^b` with operator
/// order `2a + b` between 1 and `K`, plus `J^2` itself.
pub fn tracked_set(order: u32) -> Vec<Mono> {
    let mut set = BTreeSet::new();
    set.insert(Mono::C);
    for c in 0..=order / 2 {
        for z in 0..=order - 2 * c {
            let m = Mono::new(c, z);
            if m != Mono::ONE {
                set.insert(m);
            }
        }
    }
    set.into_iter().collect()
}

/// Replaces an untracked moment by a product of tracked ones.
pub trait Closure {
    fn name(&self) -> &'static str;
    /// Factors whose product approximates `<m>`; an empty list means `1`.
    fn reduce(&self, m: Mono, tracked: &BTreeSet<Mono>) -> Result<Vec<Mono>>;
}

/// Splits off one `Jz` (or, with no `Jz` left, one `J^2`) until the remainder
/// is tracked: `<Jz^3> ~ <Jz><Jz^2>`, `<Jz J^2> ~ <Jz><J^2>`, and at first order
/// `<Jz^2> ~ <Jz>^2`. Beyond second order this is an unvalidated extension.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeelOneFactor;

impl Closure for PeelOneFactor {
    fn name(&self) -> &'static str {
        "peel-one-factor"
    }

    fn reduce(&self, m: Mono, tracked: &BTreeSet<Mono>) -> Result<Vec<Mono>> {
        if m == Mono::ONE {
            return Ok(Vec::new());
        }
        if tracked.contains(&m) {
            return Ok(vec![m]);
        }
        let (head, rest) = if m.z > 0 {
            (Mono::Z, Mono::new(m.c, m.z - 1))
        } else {
            (Mono::C, Mono::new(m.c - 1, 0))
        };
        if !tracked.contains(&head) {
            return Err(Error::Closure(m.to_string()));
        }
        let mut out = vec![head];
        out.extend(self.reduce(rest, tracked)?);
        Ok(out)
    }
}

/// One right-hand-side term: a per-channel coefficient times a product of
/// tracked moments (empty for a constant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub factors: Vec<Mono>,
    pub coefficients: [NPoly; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Mono,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicSystem {
    pub order: u32,
    pub closure: String,
    pub channels: Vec<Channel>,
    pub tracked: Vec<Mono>,
    pub equations: Vec<Equation>,
}

/// Collects `(factors, coefficient)` contributions into canonical terms.
#[derive(Default)]
pub(crate) struct TermCollector(BTreeMap<Vec<Mono>, [NPoly; 3]>);

impl TermCollector {
    pub(crate) fn add(&mut self, mut factors: Vec<Mono>, slot: usize, c: &NPoly) {
        factors.sort();
        let entry = self.0.entry(factors).or_default();
        entry[slot] = entry[slot].add(c);
    }

    pub(crate) fn finish(self) -> Vec<Term> {
        self.0
            .into_iter()
            .filter(|(_, c)| c.iter().any(|p| !p.is_zero()))
            .map(|(factors, coefficients)| Term { factors, coefficients })
            .collect()
    }
}

pub fn generate_system(order: u32, channels: &[Channel], closure: &dyn Closure) -> Result<SymbolicSystem> {
    if order == 0 {
        return Err(Error::Domain("closure order must be at least 1".into()));
    }
    let tracked = tracked_set(order);
    let tracked_lookup: BTreeSet<Mono> = tracked.iter().copied().collect();
    let mut equations = Vec::with_capacity(tracked.len());
    for &lhs in &tracked {
        let parts = monomial_derivative(lhs)?;
        let mut collector = TermCollector::default();
        for &ch in channels {
            let slot = channel_slot(ch);
            for (m, c) in parts[slot].terms() {
                collector.add(closure.reduce(m, &tracked_lookup)?, slot, c);
            }
        }
        equations.push(Equation {
            lhs,
            terms: collector.finish(),
        });
    }
    let mut channels = channels.to_vec();
    channels.sort_by_key(|c| channel_slot(*c));
    channels.dedup();
    Ok(SymbolicSystem {
        order,
        closure: closure.name().to_string(),
        channels,
        tracked,
        equations,
    })
}

impl SymbolicSystem {
    pub fn equation(&self, lhs: Mono) -> Option<&Equation> {
        self.equations.iter().find(|e| e.lhs == lhs)
    }

    /// Every factor on every right-hand side is tracked.
    pub fn check_closed(&self) -> Result<()> {
        let tracked: BTreeSet<Mono> = self.tracked.iter().copied().collect();
        for eq in &self.equations {
            for term in &eq.terms {
                if let Some(bad) = term.factors.iter().find(|f| !tracked.contains(f)) {
                    return Err(Error::Closure(format!("{bad} in the equation for {}", eq.lhs)));
                }
            }
        }
        Ok(())
    }

    /// Same equations, coefficient by coefficient, ignoring metadata.
    pub fn same_equations(&self, other: &SymbolicSystem) -> bool {
        self.tracked == other.tracked && self.equations == other.equations
    }

    pub fn compile(&self, n: u32, rates: &RateSet) -> CompiledSystem {
        let index: BTreeMap<Mono, usize> = self.tracked.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let gammas = [rates.gamma_s, rates.gamma_l, rates.gamma_d];
        let nf = n as f64;
        let equations = self
            .equations
            .iter()
            .map(|eq| {
                eq.terms
                    .iter()
                    .map(|t| {
                        let c: f64 = t.coefficients.iter().zip(gammas).map(|(p, g)| g * p.eval(nf)).sum();
                        (c, t.factors.iter().map(|f| index[f]).collect())
                    })
                    .filter(|(c, _): &(f64, Vec<usize>)| *c != 0.0)
                    .collect()
            })
            .collect();
        CompiledSystem {
            tracked: self.tracked.clone(),
            equations,
        }
    }

    /// One equation per line, tracked moments in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# order {} closure {} tracked {}", self.order, self.closure, {
            self.tracked.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
        });
        for eq in &self.equations {
            let _ = writeln!(out, "{eq}");
        }
        out
    }
}

/// Signed rendering of `c * factors` as one summand.
fn render_summand(c: &NPoly, factors: &[Mono], first: bool) -> String {
    let single: Vec<(u32, &num_rational::BigRational)> = c.terms().collect();
    let (neg, magnitude) = if single.len() == 1 {
        let (power, v) = single[0];
        let mag = v.abs();
        let number = if mag.is_one() && power > 0 { String::new() } else { format!("{mag}") };
        let n_part = match power {
            0 => String::new(),
            1 => "N".to_string(),
            k => format!("N^{k}"),
        };
        let joined = [number, n_part].iter().filter(|s| !s.is_empty()).cloned().collect::<Vec<_>>().join(" ");
        (v.is_negative(), joined)
    } else {
        (false, format!("({c})"))
    };
    let sign = match (first, neg) {
        (true, false) => "",
        (true, true) => "-",
        (false, false) => " + ",
        (false, true) => " - ",
    };
    let body: String = factors.iter().map(|m| m.to_string()).collect();
    let text = match (magnitude.as_str(), body.is_empty()) {
        (_, true) => magnitude,
        ("1", false) => body,
        (_, false) => format!("{magnitude} {body}"),
    };
    format!("{sign}{text}")
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}/dt =", self.lhs)?;
        let mut any = false;
        for (slot, name) in ["gS", "gL", "gD"].iter().enumerate() {
            let terms: Vec<&Term> = self.terms.iter().filter(|t| !t.coefficients[slot].is_zero()).collect();
            if terms.is_empty() {
                continue;
            }
            write!(f, "{} {name} * [ ", if any { " +" } else { "" })?;
            any = true;
            for (k, t) in terms.iter().enumerate() {
                write!(f, "{}", render_summand(&t.coefficients[slot], &t.factors, k == 0))?;
            }
            write!(f, " ]")?;
        }
        if !any {
            write!(f, " 0")?;
        }
        Ok(())
    }
}

/// A symbolic system with `N` and the rates substituted.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    pub tracked: Vec<Mono>,
    equations: Vec<Vec<(f64, Vec<usize>)>>,
}

impl CompiledSystem {
    pub fn dim(&self) -> usize {
        self.tracked.len()
    }

    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        for (out, eq) in dy.iter_mut().zip(&self.equations) {
            *out = eq
                .iter()
                .map(|(c, f)| c * f.iter().map(|&i| y[i]).product::<f64>())
                .sum();
        }
    }
}

/// Evaluates the unclosed right-hand side of `d<m>/dt` given every moment it
/// needs through `moment`.
pub fn unclosed_rhs(m: Mono, n: u32, rates: &RateSet, moment: impl Fn(Mono) -> f64) -> Result<f64> {
    let parts = monomial_derivative(m)?;
    let gammas = [rates.gamma_s, rates.gamma_l, rates.gamma_d];
    let nf = n as f64;
    Ok(parts
        .iter()
        .zip(gammas)
        .map(|(poly, g)| {
            if g == 0.0 {
                0.0
            } else {
                g * poly.terms().map(|(mm, c)| c.eval(nf) * moment(mm)).sum::<f64>()
            }
        })
        .sum())
}
