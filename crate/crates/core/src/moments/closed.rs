//! The first- and second-order closed systems, written out by hand.

use super::generator::{Equation, SymbolicSystem, TermCollector};
use super::poly::{rational, Mono, NPoly};
use crate::rates::{Channel, RateSet};

/// `d<Jz>/dt` and `d<J^2>/dt` with `<Jz^2> ~ <Jz>^2`.
pub fn rhs_first_order(jz: f64, j2: f64, rates: &RateSet, n: u32) -> [f64; 2] {
    let [a, b, _] = rhs_second_order(jz, j2, jz * jz, rates, n);
    [a, b]
}

/// `d<Jz>/dt`, `d<J^2>/dt` and `d<Jz^2>/dt` with
/// `<Jz^3> ~ <Jz><Jz^2>` and `<Jz J^2> ~ <Jz><J^2>`.
pub fn rhs_second_order(jz: f64, j2: f64, jz2: f64, rates: &RateSet, n: u32) -> [f64; 3] {
    let nf = n as f64;
    let (gs, gl, gd) = (rates.gamma_s, rates.gamma_l, rates.gamma_d);
    let djz = -gs * (j2 - jz2 + jz) - gl * (jz + nf / 2.0);
    let dj2 = -gd * (j2 - jz2 - nf / 2.0) - gl * (j2 + (nf - 1.0) * jz + jz2 - nf);
    let djz2 = gs * (j2 + jz - 3.0 * jz2 + 2.0 * jz * jz2 - 2.0 * jz * j2)
        - gl * ((nf - 1.0) * jz + 2.0 * jz2 - nf / 2.0);
    [djz, dj2, djz2]
}

const S: usize = 0;
const L: usize = 1;
const D: usize = 2;

fn c(v: i64) -> NPoly {
    NPoly::int(v)
}

/// `a N + b` with rational parts.
fn lin(a: (i64, i64), b: (i64, i64)) -> NPoly {
    NPoly::linear(rational(a.0, a.1), rational(b.0, b.1))
}

fn reference(order: u32, tracked: Vec<Mono>, equations: Vec<(Mono, TermCollector)>) -> SymbolicSystem {
    SymbolicSystem {
        order,
        closure: "peel-one-factor".into(),
        channels: Channel::ALL.to_vec(),
        tracked,
        equations: equations
            .into_iter()
            .map(|(lhs, t)| Equation { lhs, terms: t.finish() })
            .collect(),
    }
}

fn jz_and_j2_lines(jz2: Vec<Mono>) -> [(Mono, TermCollector); 2] {
    let (z, cc) = (Mono::Z, Mono::C);
    let mut djz = TermCollector::default();
    djz.add(vec![cc], S, &c(-1));
    djz.add(jz2.clone(), S, &c(1));
    djz.add(vec![z], S, &c(-1));
    djz.add(vec![z], L, &c(-1));
    djz.add(vec![], L, &lin((-1, 2), (0, 1)));

    let mut dj2 = TermCollector::default();
    dj2.add(vec![cc], D, &c(-1));
    dj2.add(jz2.clone(), D, &c(1));
    dj2.add(vec![], D, &lin((1, 2), (0, 1)));
    dj2.add(vec![cc], L, &c(-1));
    dj2.add(vec![z], L, &lin((-1, 1), (1, 1)));
    dj2.add(jz2, L, &c(-1));
    dj2.add(vec![], L, &lin((1, 1), (0, 1)));
    [(z, djz), (cc, dj2)]
}

/// The first-order system term by term.
pub fn first_order_reference() -> SymbolicSystem {
    let [a, b] = jz_and_j2_lines(vec![Mono::Z, Mono::Z]);
    reference(1, vec![Mono::Z, Mono::C], vec![a, b])
}

/// The second-order system term by term.
pub fn second_order_reference() -> SymbolicSystem {
    let (z, z2, cc) = (Mono::Z, Mono::new(0, 2), Mono::C);
    let [a, b] = jz_and_j2_lines(vec![z2]);
    let mut djz2 = TermCollector::default();
    djz2.add(vec![cc], S, &c(1));
    djz2.add(vec![z], S, &c(1));
    djz2.add(vec![z2], S, &c(-3));
    djz2.add(vec![z, z2], S, &c(2));
    djz2.add(vec![z, cc], S, &c(-2));
    djz2.add(vec![z], L, &lin((-1, 1), (1, 1)));
    djz2.add(vec![z2], L, &c(-2));
    djz2.add(vec![], L, &lin((1, 2), (0, 1)));
    reference(2, vec![z, z2, cc], vec![a, (z2, djz2), b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_corners() {
        let n = 40;
        let nf = n as f64;
        let top_c = nf / 2.0 * (nf / 2.0 + 1.0);
        let rates = RateSet::new(1.3, 0.7, 2.9);
        let [djz, _] = rhs_first_order(nf / 2.0, top_c, &rates, n);
        assert!((djz + (1.3 + 0.7) * nf).abs() < 1e-12);
        let ground = rhs_second_order(-nf / 2.0, top_c, nf * nf / 4.0, &rates, n);
        assert!(ground.iter().all(|d| d.abs() < 1e-12));
        let [djz, _] = rhs_first_order(0.0, top_c, &RateSet::new(1.0, 0.0, 0.0), n);
        assert_eq!(djz, -top_c);
    }

    #[test]
    fn second_order_reduces_to_first() {
        let rates = RateSet::new(1.0, 0.4, 3.0);
        for &(jz, j2) in &[(3.0, 20.0), (-1.5, 12.0), (0.0, 30.0)] {
            let [a, b] = rhs_first_order(jz, j2, &rates, 10);
            let [x, y, _] = rhs_second_order(jz, j2, jz * jz, &rates, 10);
            assert_eq!((a, b), (x, y));
        }
    }
}
