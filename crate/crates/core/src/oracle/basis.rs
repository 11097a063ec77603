//! Coupled `|j, m, alpha>` basis of the product space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::lindblad::DensityMatrix;
use super::operators::DEFAULT_MAX_SPINS;
use crate::dicke::{degeneracy_dj, dicke_position, dicke_space_len, DickeIndex, HalfInt};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub index: DickeIndex,
    pub alpha: usize,
}

/// Orthonormal real columns labelled by `(j, m, alpha)`, ordered by
/// descending `j`, descending `m`, then `alpha`.
#[derive(Debug, Clone)]
pub struct DickeBasis {
    pub n: u32,
    pub vectors: DMatrix<f64>,
    pub labels: Vec<BasisLabel>,
}

/// One multiplet during coupling: `vectors[k]` has `m = j - k`.
struct Multiplet {
    j2: i64,
    vectors: Vec<Vec<f64>>,
}

impl Multiplet {
    fn component(&self, m2: i64) -> Option<&[f64]> {
        if m2.abs() > self.j2 || (self.j2 - m2) % 2 != 0 {
            return None;
        }
        Some(&self.vectors[((self.j2 - m2) / 2) as usize])
    }
}

/// Couples one more spin-1/2 (as the new least significant bit) to `parent`.
fn couple(parent: &Multiplet, raise: bool, dim: usize) -> Multiplet {
    let big_j = parent.j2 as f64;
    let j2 = if raise { parent.j2 + 1 } else { parent.j2 - 1 };
    let denom = 2.0 * (big_j + 1.0);
    let mut vectors = Vec::with_capacity((j2 + 1) as usize);
    let mut m2 = j2;
    while m2 >= -j2 {
        let mm = m2 as f64;
        let (c_up, c_down) = if raise {
            (((big_j + mm + 1.0) / denom).sqrt(), ((big_j - mm + 1.0) / denom).sqrt())
        } else {
            (-((big_j - mm + 1.0) / denom).sqrt(), ((big_j + mm + 1.0) / denom).sqrt())
        };
        let mut v = vec![0.0; 2 * dim];
        if let Some(src) = parent.component(m2 - 1) {
            for (i, x) in src.iter().enumerate() {
                v[2 * i] += c_up * x;
            }
        }
        if let Some(src) = parent.component(m2 + 1) {
            for (i, x) in src.iter().enumerate() {
                v[2 * i + 1] += c_down * x;
            }
        }
        vectors.push(v);
        m2 -= 2;
    }
    Multiplet { j2, vectors }
}

pub fn build_dicke_basis(n: u32) -> Result<DickeBasis> {
    build_dicke_basis_capped(n, DEFAULT_MAX_SPINS)
}

pub fn build_dicke_basis_capped(n: u32, max_spins: u32) -> Result<DickeBasis> {
    if n == 0 {
        return Err(Error::Domain("ensemble size must be at least 1".into()));
    }
    if n > max_spins {
        return Err(Error::ResourceLimit {
            what: "spins for the coupled basis",
            requested: n as usize,
            cap: max_spins as usize,
        });
    }
    let mut level = vec![Multiplet {
        j2: 1,
        vectors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    }];
    for k in 1..n {
        let dim = 1usize << k;
        let mut next = Vec::with_capacity(2 * level.len());
        for parent in &level {
            next.push(couple(parent, true, dim));
            if parent.j2 > 0 {
                next.push(couple(parent, false, dim));
            }
        }
        level = next;
    }

    let dim = 1usize << n;
    let mut columns: Vec<(BasisLabel, &Vec<f64>)> = Vec::with_capacity(dim);
    let mut alpha_of_j = vec![0usize; n as usize + 1];
    for mult in &level {
        let alpha = alpha_of_j[mult.j2 as usize];
        alpha_of_j[mult.j2 as usize] += 1;
        for (k, v) in mult.vectors.iter().enumerate() {
            let index = DickeIndex {
                j: HalfInt::from_doubled(mult.j2),
                m: HalfInt::from_doubled(mult.j2 - 2 * k as i64),
            };
            columns.push((BasisLabel { index, alpha }, v));
        }
    }
    columns.sort_by(|a, b| {
        let key = |l: &BasisLabel| (-l.index.j.doubled(), -l.index.m.doubled(), l.alpha);
        key(&a.0).cmp(&key(&b.0))
    });
    let vectors = DMatrix::from_fn(dim, dim, |r, c| columns[c].1[r]);
    let labels = columns.into_iter().map(|(l, _)| l).collect();
    Ok(DickeBasis { n, vectors, labels })
}

impl DickeBasis {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, c: usize) -> DVector<f64> {
        self.vectors.column(c).into_owned()
    }

    /// Column indices carrying the given `(j, m)`.
    pub fn columns_of(&self, idx: DickeIndex) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.index == idx)
            .map(|(c, _)| c)
    }

    /// The symmetric mixture `(1/D_j) sum_alpha |j m alpha><j m alpha|`.
    pub fn dicke_density(&self, idx: DickeIndex) -> Result<DensityMatrix> {
        idx.check(self.n)?;
        let cols: Vec<usize> = self.columns_of(idx).collect();
        let weight = 1.0 / cols.len() as f64;
        let d = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for c in cols {
            let v = self.vectors.column(c);
            for j in 0..d {
                if v[j] == 0.0 {
                    continue;
                }
                for i in 0..d {
                    m[(i, j)] += Complex64::new(weight * v[i] * v[j], 0.0);
                }
            }
        }
        DensityMatrix::new(m, 0.0)
    }

    /// `P(j, m) = sum_alpha <j m alpha| rho |j m alpha>`, in
    /// [`enumerate_dicke_space`](crate::dicke::enumerate_dicke_space) order.
    pub fn populations(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let mut out = vec![0.0; dicke_space_len(self.n)];
        let re = rho.matrix.map(|z| z.re);
        let rv = &re * &self.vectors;
        for (c, label) in self.labels.iter().enumerate() {
            let p = self.vectors.column(c).dot(&rv.column(c));
            out[dicke_position(self.n, label.index)] += p;
        }
        Ok(out)
    }

    /// Number of columns per `j`, which must equal `D_j (2j + 1)`.
    pub fn check_degeneracies(&self) -> Result<()> {
        let mut j2 = self.n as i64;
        while j2 >= 0 {
            let j = HalfInt::from_doubled(j2);
            let count = self.labels.iter().filter(|l| l.index.j == j).count() as u64;
            let expected = degeneracy_dj(self.n, j)?.to_u64().unwrap_or(u64::MAX) * (j2 as u64 + 1);
            if count != expected {
                return Err(Error::Domain(format!(
                    "j = {j} has {count} columns, expected {expected}"
                )));
            }
            j2 -= 2;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::operators::build_operators;

    #[test]
    fn eigenvectors_of_collective_operators() {
        for n in 1..=8 {
            let basis = build_dicke_basis(n).unwrap();
            let ops = build_operators(n).unwrap();
            for (c, label) in basis.labels.iter().enumerate() {
                let v: Vec<f64> = basis.vectors.column(c).iter().copied().collect();
                let (j, m) = (label.index.jf(), label.index.mf());
                let j2v = ops.j2.matrix.apply_real(&v);
                let jzv = ops.jz.matrix.apply_real(&v);
                for i in 0..v.len() {
                    assert!((j2v[i].re - j * (j + 1.0) * v[i]).abs() < 1e-10);
                    assert!((jzv[i].re - m * v[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn orthonormal_and_complete() {
        for n in 1..=9 {
            let basis = build_dicke_basis(n).unwrap();
            let gram = basis.vectors.transpose() * &basis.vectors;
            let err = (gram - DMatrix::identity(basis.dim(), basis.dim())).amax();
            assert!(err < 1e-12, "n = {n}: {err}");
            basis.check_degeneracies().unwrap();
        }
    }

    #[test]
    fn four_spin_multiplicities() {
        let basis = build_dicke_basis(4).unwrap();
        let count = |j2: i64| {
            basis
                .labels
                .iter()
                .filter(|l| l.index.j.doubled() == j2 && l.index.m == HalfInt::ZERO)
                .count()
        };
        assert_eq!((count(4), count(2), count(0)), (1, 3, 2));
        assert_eq!(basis.labels[0].index, DickeIndex::excited(4));
        // the fully excited state is product index 0
        assert_eq!(basis.vectors[(0, 0)], 1.0);
    }

    #[test]
    fn dicke_density_is_a_state_with_one_population() {
        let n = 5;
        let basis = build_dicke_basis(n).unwrap();
        let idx = DickeIndex::new(n, HalfInt::from_doubled(3), HalfInt::from_doubled(-1)).unwrap();
        let rho = basis.dicke_density(idx).unwrap();
        rho.validate().unwrap();
        let pops = basis.populations(&rho).unwrap();
        for (k, p) in pops.iter().enumerate() {
            let expected = if k == dicke_position(n, idx) { 1.0 } else { 0.0 };
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cap() {
        assert!(matches!(build_dicke_basis(11), Err(Error::ResourceLimit { .. })));
    }
}
