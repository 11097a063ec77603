//! Brute-force master-equation evolution in the full product space.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{OperatorSet, ProductOperator};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeSystem};
use crate::rates::RateSet;
use crate::series::{Observable, SeriesMeta, TimeSeries};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Drift beyond this aborts an evolution.
pub const ABORT_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
    pub time: f64,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>, time: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(DensityMatrix { matrix, time })
    }

    /// A pure product state, given by its basis index.
    pub fn product_state(n: u32, index: usize) -> Self {
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityMatrix { matrix: m, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let d = self.dim();
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks the three density-matrix invariants at their nominal tolerances.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("hermiticity error", self.hermiticity_error(), HERMITICITY_TOL),
            ("trace error", self.trace_error(), TRACE_TOL),
            ("negative eigenvalue", (-self.min_eigenvalue()).max(0.0), POSITIVITY_TOL),
        ];
        for (what, value, limit) in checks {
            if value > limit {
                return Err(Error::InvariantDrift {
                    t: self.time,
                    what,
                    value,
                    limit,
                });
            }
        }
        Ok(())
    }

    pub fn expect(&self, op: &SparseMatrix) -> Complex64 {
        op.trace_with(&self.matrix)
    }

    /// Little-endian snapshot: `u32 N`, `f64 t`, then `4^N` row-major
    /// `(f64 re, f64 im)` pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let n = d.trailing_zeros();
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for i in 0..d {
            for j in 0..d {
                let z = self.matrix[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4);
        if n > 16 {
            return Err(Error::Domain(format!("snapshot header claims N = {n}")));
        }
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        let d = 1usize << n;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                r.read_exact(&mut b8)?;
                let re = f64::from_le_bytes(b8);
                r.read_exact(&mut b8)?;
                let im = f64::from_le_bytes(b8);
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        Ok(DensityMatrix { matrix: m, time })
    }
}

/// Jump operators of one channel together with the precomputed `O^dagger O`.
struct Dissipator<'a> {
    rate: f64,
    ops: Vec<(&'a SparseMatrix, SparseMatrix)>,
}

impl<'a> Dissipator<'a> {
    fn new(rate: f64, ops: impl IntoIterator<Item = &'a ProductOperator>) -> Self {
        let ops = if rate == 0.0 {
            Vec::new()
        } else {
            ops.into_iter()
                .map(|o| (&o.matrix, o.matrix.adjoint().matmul(&o.matrix)))
                .collect()
        };
        Dissipator { rate, ops }
    }

    /// Adds `(rate/2) sum_k (2 O rho O^dag - O^dag O rho - rho O^dag O)`.
    fn accumulate(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let half = Complex64::new(0.5 * self.rate, 0.0);
        for (o, odo) in &self.ops {
            let jump = o.dense_mul_adjoint(&o.mul_dense(rho));
            let left = odo.mul_dense(rho);
            let right = odo.dense_mul_adjoint(rho); // O^dag O is Hermitian
            *out += (jump * Complex64::new(2.0, 0.0) - left - right) * half;
        }
    }
}

/// Right-hand side of the three-channel master equation
/// `d rho/dt = i w0 [Jz, rho] + gS/2 L[J-] + gL/2 sum_n L[J-,n] + gD/2 sum_n L[Jz,n]`
/// with `L[O] rho = 2 O rho O^dag - O^dag O rho - rho O^dag O`.
pub fn lindblad_rhs(rho: &DensityMatrix, rates: &RateSet, ops: &OperatorSet) -> Result<DMatrix<Complex64>> {
    if rho.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho.dim(),
        });
    }
    Ok(LindbladSystem::new(*rates, ops).apply(&rho.matrix))
}

struct LindbladSystem<'a> {
    rates: RateSet,
    dim: usize,
    dissipators: Vec<Dissipator<'a>>,
    z: Vec<f64>,
}

impl<'a> LindbladSystem<'a> {
    fn new(rates: RateSet, ops: &'a OperatorSet) -> Self {
        let dim = ops.dim();
        LindbladSystem {
            rates,
            dim,
            dissipators: vec![
                Dissipator::new(rates.gamma_s, [&ops.jminus]),
                Dissipator::new(rates.gamma_l, &ops.local_minus),
                Dissipator::new(rates.gamma_d, &ops.local_z),
            ],
            z: (0..dim).map(|i| ops.jz.matrix.get(i, i).re).collect(),
        }
    }
}

impl LindbladSystem<'_> {
    fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        if self.rates.omega0 != 0.0 {
            // i w0 [Jz, rho], with Jz diagonal
            let iw = Complex64::new(0.0, self.rates.omega0);
            for c in 0..self.dim {
                for r in 0..self.dim {
                    out[(r, c)] += iw * (self.z[r] - self.z[c]) * rho[(r, c)];
                }
            }
        }
        for d in &self.dissipators {
            d.accumulate(rho, &mut out);
        }
        out
    }
}

fn unpack(y: &[f64], dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        let k = 2 * (c * dim + r);
        Complex64::new(y[k], y[k + 1])
    })
}

fn pack(m: &DMatrix<Complex64>, y: &mut [f64]) {
    for (k, z) in m.iter().enumerate() {
        y[2 * k] = z.re;
        y[2 * k + 1] = z.im;
    }
}

impl OdeSystem for LindbladSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.dim * self.dim
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        pack(&self.apply(&unpack(y, self.dim)), dy);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub rtol: f64,
    /// Diagonalize at every sample to track the most negative eigenvalue.
    pub monitor_positivity: bool,
    pub keep_snapshots: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            rtol: 1e-9,
            monitor_positivity: true,
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Most negative eigenvalue seen (0 when positivity was not monitored).
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub series: TimeSeries,
    pub snapshots: Vec<DensityMatrix>,
    pub drift: DriftReport,
}

/// Integrates the master equation, calling `observe` with the state at every
/// grid time. Trace or Hermiticity drift beyond [`ABORT_DRIFT`] aborts.
pub fn evolve_with<F>(
    rho0: &DensityMatrix,
    rates: &RateSet,
    ops: &OperatorSet,
    t_grid: &[f64],
    options: &OracleOptions,
    mut observe: F,
) -> Result<DriftReport>
where
    F: FnMut(&DensityMatrix) -> Result<()>,
{
    rates.validate()?;
    if rho0.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho0.dim(),
        });
    }
    if t_grid.first() != Some(&0.0) {
        return Err(Error::Domain("time grid must start at 0".into()));
    }
    let system = LindbladSystem::new(*rates, ops);
    let mut y = vec![0.0; system.dim()];
    pack(&rho0.matrix, &mut y);
    let mut drift = DriftReport::default();
    let opts = OdeOptions::with_rtol(options.rtol);
    ode::integrate(&system, &mut y, t_grid, &opts, |t, y| {
        let rho = DensityMatrix {
            matrix: unpack(y, system.dim),
            time: t,
        };
        let tr = rho.trace_error();
        let he = rho.hermiticity_error();
        drift.max_trace_error = drift.max_trace_error.max(tr);
        drift.max_hermiticity_error = drift.max_hermiticity_error.max(he);
        if options.monitor_positivity {
            drift.min_eigenvalue = drift.min_eigenvalue.min(rho.min_eigenvalue());
        }
        for (what, value) in [
            ("trace error", tr),
            ("hermiticity error", he),
            ("negative eigenvalue", -drift.min_eigenvalue),
        ] {
            if value > ABORT_DRIFT {
                return Err(Error::InvariantDrift {
                    t,
                    what,
                    value,
                    limit: ABORT_DRIFT,
                });
            }
        }
        observe(&rho)
    })?;
    Ok(drift)
}

/// Brute-force evolution sampling `Jz`, `J^2`, `J+J-` and `Jz^2`.
pub fn evolve(
    rho0: &DensityMatrix,
    rates: &RateSet,
    ops: &OperatorSet,
    t_grid: &[f64],
    options: &OracleOptions,
) -> Result<OracleRun> {
    let jpjm = ops.jplus.matrix.matmul(&ops.jminus.matrix);
    let jz2 = ops.jz.matrix.matmul(&ops.jz.matrix);
    let observables: [(Observable, &SparseMatrix); 4] = [
        (Observable::Jz, &ops.jz.matrix),
        (Observable::J2, &ops.j2.matrix),
        (Observable::JpJm, &jpjm),
        (Observable::Jz2, &jz2),
    ];
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(t_grid.len()); 4];
    let mut snapshots = Vec::new();
    let drift = evolve_with(rho0, rates, ops, t_grid, options, |rho| {
        for (col, (_, op)) in columns.iter_mut().zip(&observables) {
            col.push(rho.expect(op).re);
        }
        if options.keep_snapshots {
            snapshots.push(rho.clone());
        }
        Ok(())
    })?;
    let mut meta = SeriesMeta::new("oracle", ops.n, rates);
    meta.diagnostics.insert("max_trace_error".into(), drift.max_trace_error.into());
    meta.diagnostics.insert("max_hermiticity_error".into(), drift.max_hermiticity_error.into());
    meta.diagnostics.insert("min_eigenvalue".into(), drift.min_eigenvalue.into());
    let mut series = TimeSeries::new(t_grid.to_vec(), meta);
    for ((obs, _), col) in observables.iter().zip(columns) {
        series.push_column(obs.name(), col)?;
    }
    Ok(OracleRun {
        series,
        snapshots,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::operators::build_operators;

    fn random_density(n: u32, seed: u64) -> DensityMatrix {
        // deterministic pseudo-random A, rho = A A^dag / tr
        let d = 1usize << n;
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(next(), next()));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DensityMatrix {
            matrix: rho / tr,
            time: 0.0,
        }
    }

    #[test]
    fn trace_preserved_for_random_states() {
        for n in 1..=4 {
            let ops = build_operators(n).unwrap();
            let rates = RateSet::new(1.3, 0.4, 2.2).with_omega0(0.7);
            for seed in 0..3 {
                let rho = random_density(n, seed);
                rho.validate().unwrap();
                let d = lindblad_rhs(&rho, &rates, &ops).unwrap();
                assert!(d.trace().norm() < 1e-12);
                // Hermiticity of the generator
                assert!((&d - d.adjoint()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        for n in 1..=4 {
            let ops = build_operators(n).unwrap();
            let ground = DensityMatrix::product_state(n, (1 << n) - 1);
            let rates = RateSet::new(1.0, 2.0, 3.0).with_omega0(5.0);
            let d = lindblad_rhs(&ground, &rates, &ops).unwrap();
            assert_eq!(d.norm(), 0.0);
        }
    }

    #[test]
    fn single_spin_initial_slope() {
        let ops = build_operators(1).unwrap();
        let rho = DensityMatrix::product_state(1, 0);
        let d = lindblad_rhs(&rho, &RateSet::new(1.0, 0.0, 0.0), &ops).unwrap();
        let slope = DensityMatrix { matrix: d, time: 0.0 }.expect(&ops.jz.matrix);
        assert!((slope.re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let ops = build_operators(2).unwrap();
        let rho = DensityMatrix::product_state(1, 0);
        assert!(matches!(
            lindblad_rhs(&rho, &RateSet::new(1.0, 0.0, 0.0), &ops),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_spin_decay() {
        let ops = build_operators(1).unwrap();
        let rho = DensityMatrix::product_state(1, 0);
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let opts = OracleOptions {
            rtol: 1e-11,
            ..Default::default()
        };
        let mut worst: f64 = 0.0;
        evolve_with(&rho, &RateSet::new(1.0, 0.0, 0.0), &ops, &grid, &opts, |r| {
            worst = worst.max((r.matrix[(0, 0)].re - (-r.time).exp()).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn unitary_only_keeps_observables() {
        let n = 3;
        let ops = build_operators(n).unwrap();
        let rho = random_density(n, 7);
        let grid = [0.0, 0.5, 1.0, 2.0];
        let run = evolve(&rho, &RateSet::new(0.0, 0.0, 0.0).with_omega0(3.0), &ops, &grid, &OracleOptions::default()).unwrap();
        for obs in ["Jz", "J2", "JpJm", "Jz2"] {
            let col = run.series.column(obs).unwrap();
            for v in col {
                assert!((v - col[0]).abs() < 1e-9, "{obs}");
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let rho = random_density(2, 3);
        let mut buf = Vec::new();
        rho.write_snapshot(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 16 * 16);
        let back = DensityMatrix::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, rho);
    }
}
