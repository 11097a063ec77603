use std::fmt;

use num_complex::Complex64;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Default cap on brute-force ensemble sizes (density matrices are `4^N`).
pub const DEFAULT_MAX_SPINS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpLabel {
    LocalZ(u32),
    LocalMinus(u32),
    LocalPlus(u32),
    Jz,
    JMinus,
    JPlus,
    JSquared,
}

impl fmt::Display for OpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpLabel::LocalZ(n) => write!(f, "Jz,{n}"),
            OpLabel::LocalMinus(n) => write!(f, "J-,{n}"),
            OpLabel::LocalPlus(n) => write!(f, "J+,{n}"),
            OpLabel::Jz => write!(f, "Jz"),
            OpLabel::JMinus => write!(f, "J-"),
            OpLabel::JPlus => write!(f, "J+"),
            OpLabel::JSquared => write!(f, "J^2"),
        }
    }
}

/// An operator on the `2^N` product space.
#[derive(Debug, Clone)]
pub struct ProductOperator {
    pub label: OpLabel,
    pub matrix: SparseMatrix,
}

/// Local and collective spin operators for `N` spins.
///
/// Product states are indexed by `N` bits, spin 0 being the most significant;
/// a clear bit is `|up>`, so index 0 is the fully excited state.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub n: u32,
    pub local_z: Vec<ProductOperator>,
    pub local_minus: Vec<ProductOperator>,
    pub local_plus: Vec<ProductOperator>,
    pub jz: ProductOperator,
    pub jminus: ProductOperator,
    pub jplus: ProductOperator,
    pub j2: ProductOperator,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Collective `Jx = (J+ + J-)/2`.
    pub fn jx(&self) -> SparseMatrix {
        self.jplus
            .matrix
            .add(&self.jminus.matrix)
            .scale(Complex64::new(0.5, 0.0))
    }

    /// Collective `Jy = (J+ - J-)/(2i)`.
    pub fn jy(&self) -> SparseMatrix {
        self.jplus
            .matrix
            .add(&self.jminus.matrix.scale(Complex64::new(-1.0, 0.0)))
            .scale(Complex64::new(0.0, -0.5))
    }
}

pub(crate) fn spin_bit(n: u32, site: u32) -> usize {
    1 << (n - 1 - site)
}

/// `+1/2` or `-1/2` for the given site in product state `index`.
pub(crate) fn site_z(n: u32, site: u32, index: usize) -> f64 {
    if index & spin_bit(n, site) == 0 {
        0.5
    } else {
        -0.5
    }
}

pub fn build_operators(n: u32) -> Result<OperatorSet> {
    build_operators_capped(n, DEFAULT_MAX_SPINS)
}

pub fn build_operators_capped(n: u32, max_spins: u32) -> Result<OperatorSet> {
    if n == 0 {
        return Err(Error::Domain("ensemble size must be at least 1".into()));
    }
    if n > max_spins {
        return Err(Error::ResourceLimit {
            what: "spins for brute-force evolution",
            requested: n as usize,
            cap: max_spins as usize,
        });
    }
    let dim = 1usize << n;
    let one = Complex64::new(1.0, 0.0);

    let mut local_z = Vec::with_capacity(n as usize);
    let mut local_minus = Vec::with_capacity(n as usize);
    let mut local_plus = Vec::with_capacity(n as usize);
    for site in 0..n {
        let bit = spin_bit(n, site);
        let z: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(site_z(n, site, i), 0.0))
            .collect();
        local_z.push(ProductOperator {
            label: OpLabel::LocalZ(site),
            matrix: SparseMatrix::diagonal(&z),
        });
        // J-,n takes |up> (bit clear) to |down> (bit set)
        let minus = (0..dim)
            .filter(|i| i & bit == 0)
            .map(|i| (i | bit, i, one))
            .collect();
        let minus = SparseMatrix::from_triplets(dim, minus);
        local_plus.push(ProductOperator {
            label: OpLabel::LocalPlus(site),
            matrix: minus.adjoint(),
        });
        local_minus.push(ProductOperator {
            label: OpLabel::LocalMinus(site),
            matrix: minus,
        });
    }

    let sum = |ops: &[ProductOperator]| {
        let t = ops.iter().flat_map(|o| o.matrix.triplets()).collect();
        SparseMatrix::from_triplets(dim, t)
    };
    let jz = sum(&local_z);
    let jminus = sum(&local_minus);
    let jplus = sum(&local_plus);
    // J^2 = Jz^2 - Jz + J+ J-
    let j2 = jz
        .matmul(&jz)
        .add(&jz.scale(-one))
        .add(&jplus.matmul(&jminus));

    Ok(OperatorSet {
        n,
        local_z,
        local_minus,
        local_plus,
        jz: ProductOperator {
            label: OpLabel::Jz,
            matrix: jz,
        },
        jminus: ProductOperator {
            label: OpLabel::JMinus,
            matrix: jminus,
        },
        jplus: ProductOperator {
            label: OpLabel::JPlus,
            matrix: jplus,
        },
        j2: ProductOperator {
            label: OpLabel::JSquared,
            matrix: j2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sorted_real_spectrum(m: &SparseMatrix) -> Vec<f64> {
        let dense = m.to_dense();
        let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn single_spin() {
        let ops = build_operators(1).unwrap();
        let jz = ops.jz.matrix.to_dense();
        assert_eq!(jz[(0, 0)].re, 0.5);
        assert_eq!(jz[(1, 1)].re, -0.5);
        assert_eq!(ops.jminus.matrix.get(1, 0).re, 1.0);
    }

    #[test]
    fn spectra_of_j_squared() {
        let two = sorted_real_spectrum(&build_operators(2).unwrap().j2.matrix);
        for (a, b) in two.iter().zip([0.0, 2.0, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let three = sorted_real_spectrum(&build_operators(3).unwrap().j2.matrix);
        let expected = [0.75; 4].iter().chain([3.75; 4].iter()).copied().collect::<Vec<_>>();
        for (a, b) in three.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_and_commutators() {
        for n in 1..=6 {
            let ops = build_operators(n).unwrap();
            for site in 0..n as usize {
                assert_eq!(ops.local_minus[site].matrix.nnz(), 1 << (n - 1));
                assert_eq!(ops.local_plus[site].matrix.nnz(), 1 << (n - 1));
            }
            assert!(ops.jz.matrix.triplets().all(|(r, c, _)| r == c));
            let (jx, jy) = (ops.jx().to_dense(), ops.jy().to_dense());
            let comm: DMatrix<Complex64> = &jx * &jy - &jy * &jx;
            let ijz = ops.jz.matrix.to_dense() * Complex64::new(0.0, 1.0);
            assert!((comm - ijz).norm() < 1e-12);
        }
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(build_operators(11), Err(Error::ResourceLimit { .. })));
        assert!(build_operators_capped(11, 12).is_ok());
        assert!(build_operators(0).is_err());
    }
}
