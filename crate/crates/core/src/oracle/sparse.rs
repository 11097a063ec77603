use nalgebra::DMatrix;
use num_complex::Complex64;

/// Square complex matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != Complex64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let dim = values.len();
        let t = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(dim, t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Non-zeros of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, t)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let t = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.dim, t)
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    /// `A x` for a dense real vector.
    pub fn apply_real(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `A M` for dense `M`.
    pub fn mul_dense(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for col in 0..m.ncols() {
            let src = m.column(col);
            let mut dst = out.column_mut(col);
            for r in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in self.row(r) {
                    acc += v * src[k];
                }
                dst[r] = acc;
            }
        }
        out
    }

    /// `M A^dagger` for dense `M`.
    pub fn dense_mul_adjoint(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        // column j of the product is sum_k conj(A_jk) M[:, k]
        let mut out = DMatrix::zeros(m.nrows(), self.dim);
        for j in 0..self.dim {
            for (k, v) in self.row(j) {
                let w = v.conj();
                let src = m.column(k);
                let mut dst = out.column_mut(j);
                for i in 0..m.nrows() {
                    dst[i] += w * src[i];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            out[(r, c)] += v;
        }
        out
    }

    /// `Tr(A M)`.
    pub fn trace_with(&self, m: &DMatrix<Complex64>) -> Complex64 {
        self.triplets().map(|(r, c, v)| v * m[(c, r)]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            vec![(0, 1, c(1.0, 2.0)), (2, 0, c(-0.5, 0.0)), (2, 0, c(0.25, 0.0)), (1, 1, c(0.0, 0.0))],
        )
    }

    #[test]
    fn assembly_merges_and_drops_zeros() {
        let a = sample();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(2, 0), c(-0.25, 0.0));
    }

    #[test]
    fn products_agree_with_dense() {
        let a = sample();
        let m = DMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.3 * j as f64, j as f64 - 1.0));
        let ad = a.to_dense();
        assert!((a.mul_dense(&m) - &ad * &m).norm() < 1e-14);
        assert!((a.dense_mul_adjoint(&m) - &m * ad.adjoint()).norm() < 1e-14);
        assert!((a.matmul(&a).to_dense() - &ad * &ad).norm() < 1e-14);
        assert!((a.trace_with(&m) - (&ad * &m).trace()).norm() < 1e-14);
        assert_eq!(a.adjoint().to_dense(), ad.adjoint());
    }
}
