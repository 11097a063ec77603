use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::delay::{effective_delay_time, refine_delay_time, DelayTime};
use crate::dicke::{delay_time_pure, dephasing_threshold};
use crate::error::{Error, Result};
use crate::rates::RateSet;
use crate::run::{run, InitialState, RunConfig, SolverKind};
use crate::series::fmt_float;

/// Dephasing rates of a sweep, either absolute or in units of the
/// threshold `gamma_S N / sqrt(ln N)` of each row's `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingGrid {
    Absolute(Vec<f64>),
    RelativeToThreshold(Vec<f64>),
}

impl DephasingGrid {
    fn len(&self) -> usize {
        match self {
            DephasingGrid::Absolute(v) | DephasingGrid::RelativeToThreshold(v) => v.len(),
        }
    }

    fn at(&self, k: usize, n: u32, gamma_s: f64) -> f64 {
        match self {
            DephasingGrid::Absolute(v) => v[k],
            DephasingGrid::RelativeToThreshold(v) => v[k] * dephasing_threshold(n as u64, gamma_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_grid: Vec<u32>,
    pub gamma_d: DephasingGrid,
    pub gamma_s: f64,
    pub gamma_l: f64,
    pub solver: SolverKind,
    pub samples: usize,
    pub rtol: f64,
    /// Re-solve each crossing over its bracket at a tighter tolerance.
    pub refine: bool,
    /// How many times `t_max` may be doubled when the crossing is not reached.
    pub max_extensions: u32,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl SweepSpec {
    pub fn new(n_grid: Vec<u32>, gamma_d: DephasingGrid, gamma_s: f64, gamma_l: f64, solver: SolverKind) -> Self {
        SweepSpec {
            n_grid,
            gamma_d,
            gamma_s,
            gamma_l,
            solver,
            samples: 401,
            rtol: 1e-8,
            refine: true,
            max_extensions: 6,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub gamma_d: f64,
    /// `N gamma_S / gamma_D`.
    pub coherence_ratio: f64,
    pub t_d_eff: Option<f64>,
    pub t_d: f64,
    pub t0: f64,
    pub error: Option<String>,
}

/// Initial `t_max` for one point: a few times the slower of the two
/// limiting time scales.
fn initial_horizon(rates: &RateSet, n: u32) -> f64 {
    4.0 * rates.t0().max(delay_time_pure(n as u64, rates.gamma_s.max(f64::MIN_POSITIVE)))
}

fn delay_for(spec: &SweepSpec, n: u32, rates: RateSet) -> Result<Option<f64>> {
    let mut config = RunConfig::new(spec.solver, n, rates, initial_horizon(&rates, n));
    config.initial = InitialState::excited(n);
    config.samples = spec.samples;
    config.rtol = spec.rtol;
    for _ in 0..=spec.max_extensions {
        let series = run(&config)?;
        match effective_delay_time(&series)? {
            reached @ DelayTime::Reached { .. } => {
                let found = if spec.refine {
                    refine_delay_time(&config, reached)?
                } else {
                    reached
                };
                return Ok(found.time());
            }
            DelayTime::NotReached { .. } => config.t_max *= 2.0,
        }
    }
    Ok(None)
}

/// Delay times over the `(N, gamma_D)` grid, from full inversion, in
/// row-major order of `n_grid` then the dephasing grid. A failing point is
/// recorded on its row and the sweep carries on.
pub fn sweep_phase_diagram(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.n_grid.is_empty() || spec.gamma_d.len() == 0 {
        return Err(Error::Domain("sweep grids must be non-empty".into()));
    }
    if spec.n_grid.iter().any(|n| *n < 2) {
        return Err(Error::Domain("sweep sizes must be at least 2".into()));
    }
    if spec.samples < 2 {
        return Err(Error::Domain("at least two samples are needed".into()));
    }
    if !(1e-12..=1e-3).contains(&spec.rtol) {
        return Err(Error::Domain(format!("rtol {} outside [1e-12, 1e-3]", spec.rtol)));
    }
    let points: Vec<(u32, f64)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.gamma_d.len()).map(move |k| (n, k)))
        .map(|(n, k)| (n, spec.gamma_d.at(k, n, spec.gamma_s)))
        .collect();
    for &(_, gamma_d) in &points {
        RateSet::new(spec.gamma_s, spec.gamma_l, gamma_d).validate_for_evolution()?;
    }
    let work = || -> Vec<SweepRow> {
        points
            .par_iter()
            .map(|&(n, gamma_d)| {
                let rates = RateSet::new(spec.gamma_s, spec.gamma_l, gamma_d);
                let (t_d_eff, error) = match delay_for(spec, n, rates) {
                    Ok(t) => (t, None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SweepRow {
                    n,
                    gamma_d,
                    coherence_ratio: n as f64 * spec.gamma_s / gamma_d,
                    t_d_eff,
                    t_d: delay_time_pure(n as u64, spec.gamma_s),
                    t0: rates.t0(),
                    error,
                }
            })
            .collect()
    };
    match spec.jobs {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("cannot start {k} workers: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// CSV with columns `N, gamma_D, N_gamma_S_over_gamma_D, t_d_eff, t_d, t0, error`;
/// an unreached or failed delay is left empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "gamma_D", "N_gamma_S_over_gamma_D", "t_d_eff", "t_d", "t0", "error"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            fmt_float(r.gamma_d),
            fmt_float(r.coherence_ratio),
            r.t_d_eff.map(fmt_float).unwrap_or_default(),
            fmt_float(r.t_d),
            fmt_float(r.t0),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
