//! Channel transition rates measured by brute force in the coupled basis.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::basis::DickeBasis;
use super::operators::OperatorSet;
use super::sparse::SparseMatrix;
use crate::dicke::DickeIndex;
use crate::error::{Error, Result};
use crate::rates::Channel;

/// Rates `(j, m) -> (j', m')` of one channel at unit strength, averaged over
/// the source degeneracy and summed over destination copies.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredRates {
    pub n: u32,
    pub channel: Channel,
    /// Keyed by `(source, destination)`, self transitions included.
    pub transitions: BTreeMap<(DickeIndex, DickeIndex), f64>,
    /// Total jump rate out of each source, from `sum_k ||O_k v||^2`.
    pub outflow: BTreeMap<DickeIndex, f64>,
}

impl MeasuredRates {
    pub fn rate(&self, from: DickeIndex, to: DickeIndex) -> f64 {
        self.transitions.get(&(from, to)).copied().unwrap_or(0.0)
    }

    /// Sum of measured destination rates out of `from`, self transitions included.
    pub fn destination_total(&self, from: DickeIndex) -> f64 {
        self.transitions
            .iter()
            .filter(|((src, _), _)| *src == from)
            .map(|(_, r)| r)
            .sum()
    }
}

fn jump_operators(ops: &OperatorSet, channel: Channel) -> Vec<&SparseMatrix> {
    match channel {
        Channel::S => vec![&ops.jminus.matrix],
        Channel::L => ops.local_minus.iter().map(|o| &o.matrix).collect(),
        Channel::D => ops.local_z.iter().map(|o| &o.matrix).collect(),
    }
}

fn real_part(m: &SparseMatrix, dense: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.dim(), dense.ncols());
    for (r, c, v) in m.triplets() {
        for k in 0..dense.ncols() {
            out[(r, k)] += v.re * dense[(c, k)];
        }
    }
    out
}

pub fn measure_channel_rates(
    basis: &DickeBasis,
    ops: &OperatorSet,
    channel: Channel,
) -> Result<MeasuredRates> {
    if basis.n != ops.n {
        return Err(Error::DimensionMismatch {
            expected: ops.n as usize,
            found: basis.n as usize,
        });
    }
    let d = basis.dim();
    let mut weight = vec![0usize; d];
    for (c, label) in basis.labels.iter().enumerate() {
        weight[c] = basis.columns_of(label.index).count();
    }
    let mut transitions = BTreeMap::new();
    let mut outflow = BTreeMap::new();
    let bt = basis.vectors.transpose();
    for op in jump_operators(ops, channel) {
        let image = real_part(op, &basis.vectors);
        let overlaps = &bt * &image;
        for src in 0..d {
            let from = basis.labels[src].index;
            let inv_deg = 1.0 / weight[src] as f64;
            *outflow.entry(from).or_insert(0.0) += inv_deg * image.column(src).norm_squared();
            for dst in 0..d {
                let a = overlaps[(dst, src)];
                if a != 0.0 {
                    *transitions
                        .entry((from, basis.labels[dst].index))
                        .or_insert(0.0) += inv_deg * a * a;
                }
            }
        }
    }
    transitions.retain(|_, r: &mut f64| *r > 1e-14);
    Ok(MeasuredRates {
        n: basis.n,
        channel,
        transitions,
        outflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{enumerate_dicke_space, HalfInt};
    use crate::oracle::{build_dicke_basis, build_operators};

    #[test]
    fn two_spin_rates() {
        let basis = build_dicke_basis(2).unwrap();
        let ops = build_operators(2).unwrap();
        let t = |j2, m2| DickeIndex {
            j: HalfInt::from_doubled(j2),
            m: HalfInt::from_doubled(m2),
        };
        let d = measure_channel_rates(&basis, &ops, Channel::D).unwrap();
        assert!((d.rate(t(2, 0), t(0, 0)) - 0.5).abs() < 1e-12);
        assert!((d.rate(t(2, 2), t(2, 2)) - 0.5).abs() < 1e-12);
        assert_eq!(d.rate(t(2, 2), t(0, 0)), 0.0);
        let s = measure_channel_rates(&basis, &ops, Channel::S).unwrap();
        assert!((s.rate(t(2, 2), t(2, 0)) - 2.0).abs() < 1e-12);
        assert!((s.rate(t(2, 0), t(2, -2)) - 2.0).abs() < 1e-12);
        assert_eq!(s.rate(t(0, 0), t(0, 0)), 0.0);
    }

    #[test]
    fn destinations_account_for_outflow() {
        for n in 1..=7 {
            let basis = build_dicke_basis(n).unwrap();
            let ops = build_operators(n).unwrap();
            for ch in Channel::ALL {
                let r = measure_channel_rates(&basis, &ops, ch).unwrap();
                for idx in enumerate_dicke_space(n).unwrap() {
                    let out = r.outflow[&idx];
                    assert!((r.destination_total(idx) - out).abs() < 1e-10 * (1.0 + out));
                }
            }
        }
    }

    #[test]
    fn dephasing_conserves_m_and_loss_lowers_it_by_one() {
        let n = 6;
        let basis = build_dicke_basis(n).unwrap();
        let ops = build_operators(n).unwrap();
        let d = measure_channel_rates(&basis, &ops, Channel::D).unwrap();
        assert!(d.transitions.keys().all(|(a, b)| a.m == b.m && (a.j - b.j).abs().doubled() <= 2));
        let l = measure_channel_rates(&basis, &ops, Channel::L).unwrap();
        assert!(l
            .transitions
            .keys()
            .all(|(a, b)| b.m == a.m - HalfInt::ONE && (a.j - b.j).abs().doubled() <= 2));
    }
}
