use serde::{Deserialize, Serialize};

use super::matrix::{build_rate_matrix, RateMatrix};
use crate::dicke::{dicke_position, enumerate_dicke_space, DickeIndex};
use crate::error::{Error, Result};
use crate::ode::{check_grid, Dopri5, OdeOptions, OdeStats, OdeSystem, StepFailure};
use crate::rates::RateSet;
use crate::series::{Observable, SeriesMeta, TimeSeries};

/// Normalization drift beyond this aborts a run.
pub const NORMALIZATION_ABORT: f64 = 1e-6;

/// Populations `p(j, m)` summed over the degenerate copies, in
/// [`enumerate_dicke_space`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector {
    pub n: u32,
    pub time: f64,
    pub p: Vec<f64>,
}

impl PopulationVector {
    pub fn new(n: u32, p: Vec<f64>) -> Result<Self> {
        let states = enumerate_dicke_space(n)?;
        if p.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: p.len(),
            });
        }
        let pv = PopulationVector { n, time: 0.0, p };
        let err = pv.normalization_error();
        if err > 1e-10 {
            return Err(Error::Domain(format!("populations sum to 1 + {err:e}")));
        }
        if let Some(bad) = pv.p.iter().find(|&&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
            return Err(Error::Domain(format!("population {bad} outside [0, 1]")));
        }
        Ok(pv)
    }

    pub fn get(&self, idx: DickeIndex) -> f64 {
        self.p[dicke_position(self.n, idx)]
    }

    pub fn normalization_error(&self) -> f64 {
        (self.p.iter().sum::<f64>() - 1.0).abs()
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `<Jz>`, `<J^2>`, `<J+J->`, `<Jz^2>`.
    pub fn moments(&self) -> [f64; 4] {
        moments_of(self.n, &self.p)
    }
}

fn moments_of(n: u32, p: &[f64]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    let top = n as i64;
    let mut k = 0;
    let mut j2 = top;
    while j2 >= 0 {
        let j = j2 as f64 / 2.0;
        let jj = j * (j + 1.0);
        let mut m2 = j2;
        while m2 >= -j2 {
            let m = m2 as f64 / 2.0;
            let w = p[k];
            acc[0] += w * m;
            acc[1] += w * jj;
            acc[2] += w * (jj - m * m + m);
            acc[3] += w * m * m;
            k += 1;
            m2 -= 2;
        }
        j2 -= 2;
    }
    acc
}

/// All mass on `(j, m)`; for `D_j > 1` this stands for the uniform mixture
/// over the degenerate copies.
pub fn initial_dicke_state(n: u32, idx: DickeIndex) -> Result<PopulationVector> {
    idx.check(n)?;
    let mut p = vec![0.0; crate::dicke::dicke_space_len(n)];
    p[dicke_position(n, idx)] = 1.0;
    Ok(PopulationVector { n, time: 0.0, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stepper {
    /// Explicit Dormand–Prince, switching to the implicit scheme if the step
    /// size collapses or the step budget runs out.
    Auto,
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiqsOptions {
    pub rtol: f64,
    pub stepper: Stepper,
    /// Explicit-step budget before the fallback kicks in.
    pub explicit_step_budget: usize,
}

impl Default for PiqsOptions {
    fn default() -> Self {
        PiqsOptions {
            rtol: 1e-9,
            stepper: Stepper::Auto,
            explicit_step_budget: 200_000,
        }
    }
}

impl PiqsOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        PiqsOptions {
            rtol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PiqsDiagnostics {
    pub explicit: OdeStats,
    pub implicit_steps: usize,
    pub implicit_rejected: usize,
    /// Time at which the implicit fallback took over, if it did.
    pub fallback_at: Option<f64>,
    pub max_normalization_error: f64,
    pub min_population: f64,
}

impl OdeSystem for RateMatrix {
    fn dim(&self) -> usize {
        self.states.len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.apply(y, dy);
    }
}

/// Number of backward-Euler sweeps combined per extrapolated step.
const EXTRAPOLATION_DEPTH: usize = 6;

/// Extrapolated backward Euler on `dp/dt = A p`.
///
/// `m` never increases under any channel, so ordering states by `m` makes
/// `I - h A` block lower triangular with tridiagonal (in `j`) diagonal blocks.
struct ImplicitStepper<'a> {
    a: &'a RateMatrix,
    /// State indices of each `m` block, highest `m` first, ascending `j` within.
    blocks: Vec<Vec<usize>>,
    /// For each state, its block and offset within the block.
    place: Vec<(usize, usize)>,
    rtol: f64,
    atol: f64,
    h: f64,
    steps: usize,
    rejected: usize,
}

impl<'a> ImplicitStepper<'a> {
    fn new(a: &'a RateMatrix, rtol: f64, h: f64) -> Self {
        let n = a.n as i64;
        let mut blocks = Vec::new();
        let mut place = vec![(0, 0); a.dim()];
        let mut m2 = n;
        while m2 >= -n {
            let mut block: Vec<usize> = a
                .states
                .iter()
                .enumerate()
                .filter(|(_, s)| s.m.doubled() == m2)
                .map(|(k, _)| k)
                .collect();
            block.sort_by_key(|&k| a.states[k].j);
            for (off, &k) in block.iter().enumerate() {
                place[k] = (blocks.len(), off);
            }
            blocks.push(block);
            m2 -= 2;
        }
        ImplicitStepper {
            a,
            blocks,
            place,
            rtol,
            atol: (rtol * 1e-3).max(1e-15),
            h,
            steps: 0,
            rejected: 0,
        }
    }

    /// Solves `(I - h A) x = b`.
    fn solve(&self, h: f64, b: &[f64], x: &mut [f64]) {
        for (bi, block) in self.blocks.iter().enumerate() {
            let len = block.len();
            let mut sub = vec![0.0; len];
            let mut diag = vec![1.0; len];
            let mut sup = vec![0.0; len];
            let mut rhs = vec![0.0; len];
            for (off, &r) in block.iter().enumerate() {
                rhs[off] = b[r];
                for (c, v) in self.a.row(r) {
                    let (cb, co) = self.place[c];
                    if cb == bi {
                        match co as i64 - off as i64 {
                            0 => diag[off] -= h * v,
                            -1 => sub[off] -= h * v,
                            1 => sup[off] -= h * v,
                            _ => unreachable!("dephasing couples only neighbouring j"),
                        }
                    } else {
                        // higher m, already solved
                        rhs[off] += h * v * x[c];
                    }
                }
            }
            // Thomas elimination; I - hA is a column diagonally dominant M-matrix
            for k in 1..len {
                let w = sub[k] / diag[k - 1];
                diag[k] -= w * sup[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            for k in (0..len).rev() {
                let mut v = rhs[k];
                if k + 1 < len {
                    v -= sup[k] * x[block[k + 1]];
                }
                x[block[k]] = v / diag[k];
            }
        }
    }

    /// `n_sub` backward-Euler substeps of total length `h`.
    fn euler_sweep(&self, h: f64, n_sub: usize, p: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.copy_from_slice(p);
        for _ in 0..n_sub {
            scratch.copy_from_slice(out);
            self.solve(h / n_sub as f64, scratch, out);
        }
    }

    /// One extrapolated step over the substep counts `1..=EXTRAPOLATION_DEPTH`.
    /// Leaves the result in `out` and returns the scaled error estimate.
    fn extrapolated_step(&self, h: f64, p: &[f64], out: &mut [f64]) -> f64 {
        let d = p.len();
        let mut scratch = vec![0.0; d];
        let mut prev: Vec<Vec<f64>> = Vec::new();
        for i in 0..EXTRAPOLATION_DEPTH {
            let mut row = vec![vec![0.0; d]];
            self.euler_sweep(h, i + 1, p, &mut row[0], &mut scratch);
            // the implicit Euler error expands in powers of h
            for k in 1..=i {
                let ratio = (i + 1) as f64 / (i + 1 - k) as f64 - 1.0;
                let next: Vec<f64> = row[k - 1]
                    .iter()
                    .zip(&prev[k - 1])
                    .map(|(a, b)| a + (a - b) / ratio)
                    .collect();
                row.push(next);
            }
            prev = row;
        }
        let best = &prev[EXTRAPOLATION_DEPTH - 1];
        let second = &prev[EXTRAPOLATION_DEPTH - 2];
        let mut err: f64 = 0.0;
        for x in 0..d {
            let sc = self.atol + self.rtol * p[x].abs().max(best[x].abs());
            err = err.max((best[x] - second[x]).abs() / sc);
        }
        out.copy_from_slice(best);
        err
    }

    fn advance_to(&mut self, t: &mut f64, t_out: f64, p: &mut [f64]) -> Result<()> {
        let mut next = vec![0.0; p.len()];
        let order = (EXTRAPOLATION_DEPTH - 1) as f64;
        while *t < t_out {
            let remaining = t_out - *t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h };
            let err = self.extrapolated_step(h, p, &mut next);
            if err <= 1.0 {
                p.copy_from_slice(&next);
                *t = if last { t_out } else { *t + h };
                self.steps += 1;
                let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / order)).clamp(0.2, 4.0) };
                self.h = if last { self.h.max(h * grow) } else { h * grow };
            } else {
                self.rejected += 1;
                self.h = h * (0.9 * err.powf(-1.0 / order)).clamp(0.1, 0.9);
                if self.h < 1e-14 * t_out.abs().max(1e-300) {
                    return Err(Error::Integration {
                        t: *t,
                        reason: "implicit step size collapsed".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Integrates `dp/dt = A p` from `p0`, calling `observe` at every grid time.
pub fn evolve_populations_with<F>(
    p0: &PopulationVector,
    rates: &RateSet,
    t_grid: &[f64],
    options: &PiqsOptions,
    mut observe: F,
) -> Result<PiqsDiagnostics>
where
    F: FnMut(&PopulationVector) -> Result<()>,
{
    check_grid(t_grid)?;
    let a = build_rate_matrix(p0.n, rates)?;
    if p0.p.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: p0.p.len(),
        });
    }
    let mut diag = PiqsDiagnostics {
        min_population: p0.min(),
        ..Default::default()
    };
    let mut state = p0.clone();
    state.time = t_grid[0];
    let mut record = |state: &PopulationVector, diag: &mut PiqsDiagnostics| -> Result<()> {
        let err = state.normalization_error();
        diag.max_normalization_error = diag.max_normalization_error.max(err);
        diag.min_population = diag.min_population.min(state.min());
        if err > NORMALIZATION_ABORT {
            return Err(Error::InvariantDrift {
                t: state.time,
                what: "population normalization error",
                value: err,
                limit: NORMALIZATION_ABORT,
            });
        }
        observe(state)
    };
    record(&state, &mut diag)?;

    let ode_opts = OdeOptions {
        max_steps: match options.stepper {
            Stepper::Auto => options.explicit_step_budget,
            _ => OdeOptions::default().max_steps,
        },
        ..OdeOptions::with_rtol(options.rtol)
    };
    let mut explicit = match options.stepper {
        Stepper::Implicit => None,
        _ => Some(Dopri5::new(&a, &ode_opts, t_grid[0], &state.p)?),
    };
    let mut implicit: Option<ImplicitStepper> = match options.stepper {
        Stepper::Implicit => Some(ImplicitStepper::new(&a, options.rtol, initial_implicit_step(&a, t_grid))),
        _ => None,
    };
    let mut t = t_grid[0];
    for &t_out in &t_grid[1..] {
        if let Some(stepper) = explicit.as_mut() {
            match stepper.advance_to(t_out, &mut state.p) {
                Ok(()) => t = t_out,
                Err(failure) if options.stepper == Stepper::Auto => {
                    let (at, h) = match failure {
                        StepFailure::StepCollapse { t, h } => (t, h),
                        StepFailure::TooManySteps { t } => (t, stepper.stats.h_last),
                    };
                    log::warn!("explicit stepping stalled at t = {at}; switching to the implicit scheme");
                    diag.explicit = stepper.stats;
                    diag.fallback_at = Some(at);
                    t = at;
                    let h0 = (h * 100.0).max(initial_implicit_step(&a, t_grid));
                    implicit = Some(ImplicitStepper::new(&a, options.rtol, h0));
                    explicit = None;
                }
                Err(failure) => return Err(failure.into()),
            }
        }
        if let Some(stepper) = implicit.as_mut() {
            stepper.advance_to(&mut t, t_out, &mut state.p)?;
            diag.implicit_steps = stepper.steps;
            diag.implicit_rejected = stepper.rejected;
        }
        state.time = t_out;
        record(&state, &mut diag)?;
    }
    if let Some(stepper) = explicit {
        diag.explicit = stepper.stats;
    }
    Ok(diag)
}

fn initial_implicit_step(a: &RateMatrix, t_grid: &[f64]) -> f64 {
    let fastest = (0..a.dim()).map(|k| -a.get(k, k)).fold(0.0, f64::max);
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    if fastest > 0.0 {
        (0.01 / fastest).min(span)
    } else {
        span
    }
}

#[derive(Debug, Clone)]
pub struct PiqsRun {
    pub series: TimeSeries,
    pub final_state: PopulationVector,
    pub diagnostics: PiqsDiagnostics,
}

/// Population dynamics sampled as `<Jz>`, `<J^2>`, `<J+J->` and `<Jz^2>`.
pub fn evolve_populations(
    p0: &PopulationVector,
    rates: &RateSet,
    t_grid: &[f64],
    options: &PiqsOptions,
) -> Result<PiqsRun> {
    let mut columns: [Vec<f64>; 4] = Default::default();
    let mut last = p0.clone();
    let diagnostics = evolve_populations_with(p0, rates, t_grid, options, |pv| {
        for (col, v) in columns.iter_mut().zip(pv.moments()) {
            col.push(v);
        }
        last.clone_from(pv);
        Ok(())
    })?;
    let mut meta = SeriesMeta::new("piqs", p0.n, rates);
    meta.diagnostics = match serde_json::to_value(diagnostics)? {
        serde_json::Value::Object(map) => map,
        _ => unreachable!(),
    };
    let mut series = TimeSeries::new(t_grid.to_vec(), meta);
    let names = [Observable::Jz, Observable::J2, Observable::JpJm, Observable::Jz2];
    for (obs, col) in names.iter().zip(columns) {
        series.push_column(obs.name(), col)?;
    }
    Ok(PiqsRun {
        series,
        final_state: last,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::HalfInt;
    use crate::series::uniform_grid;

    #[test]
    fn two_spin_cascade() {
        let n = 2;
        let grid = uniform_grid(3.0, 31).unwrap();
        let p0 = initial_dicke_state(n, DickeIndex::excited(n)).unwrap();
        let top = DickeIndex::excited(n);
        let mid = DickeIndex::new(n, HalfInt::ONE, HalfInt::ZERO).unwrap();
        let bottom = DickeIndex::new(n, HalfInt::ONE, -HalfInt::ONE).unwrap();
        for stepper in [Stepper::Explicit, Stepper::Implicit] {
            let opts = PiqsOptions {
                rtol: 1e-11,
                stepper,
                ..Default::default()
            };
            let tol = 1e-9;
            evolve_populations_with(&p0, &RateSet::new(1.0, 0.0, 0.0), &grid, &opts, |pv| {
                let t = pv.time;
                let e = (-2.0 * t).exp();
                assert!((pv.get(top) - e).abs() < tol);
                assert!((pv.get(mid) - 2.0 * t * e).abs() < tol);
                assert!((pv.get(bottom) - (1.0 - e - 2.0 * t * e)).abs() < tol);
                Ok(())
            })
            .unwrap();
        }
    }

    #[test]
    fn ground_state_is_constant() {
        let n = 6;
        let p0 = initial_dicke_state(n, DickeIndex::ground(n)).unwrap();
        let run = evolve_populations(&p0, &RateSet::new(1.0, 2.0, 3.0), &[0.0, 1.0, 5.0], &PiqsOptions::default()).unwrap();
        assert_eq!(run.final_state.p, p0.p);
    }

    #[test]
    fn implicit_matches_explicit() {
        let n = 12;
        let rates = RateSet::new(1.0, 0.3, 4.0);
        let grid = uniform_grid(1.0, 11).unwrap();
        let p0 = initial_dicke_state(n, DickeIndex::excited(n)).unwrap();
        let run = |stepper| {
            let opts = PiqsOptions {
                rtol: 1e-10,
                stepper,
                ..Default::default()
            };
            evolve_populations(&p0, &rates, &grid, &opts).unwrap().final_state
        };
        let (e, i) = (run(Stepper::Explicit), run(Stepper::Implicit));
        for (a, b) in e.p.iter().zip(&i.p) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn fallback_engages_on_tiny_budget() {
        let n = 10;
        let p0 = initial_dicke_state(n, DickeIndex::excited(n)).unwrap();
        let opts = PiqsOptions {
            rtol: 1e-9,
            stepper: Stepper::Auto,
            explicit_step_budget: 5,
        };
        let grid = uniform_grid(2.0, 5).unwrap();
        let rates = RateSet::new(1.0, 0.1, 1000.0);
        let auto = evolve_populations(&p0, &rates, &grid, &opts).unwrap();
        assert!(auto.diagnostics.fallback_at.is_some());
        let reference = evolve_populations(&p0, &rates, &grid, &PiqsOptions { stepper: Stepper::Explicit, ..opts }).unwrap();
        let (a, b) = (auto.series.column("Jz").unwrap(), reference.series.column("Jz").unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-5 * n as f64);
        }
    }

    #[test]
    fn rejects_unnormalized_input() {
        assert!(PopulationVector::new(2, vec![0.5, 0.0, 0.0, 0.0]).is_err());
        assert!(PopulationVector::new(2, vec![1.0, 0.0, 0.0]).is_err());
        assert!(PopulationVector::new(2, vec![0.5, 0.5, 0.0, 0.0]).is_ok());
    }
}
