use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::run::{run_on_grid, RunConfig};
use crate::series::{Observable, TimeSeries};

/// Outcome of the half-filling search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DelayTime {
    /// `<Jz>` crosses zero at `t`, between the samples `bracket`.
    Reached { t: f64, bracket: (f64, f64) },
    /// No crossing before `t_max`; extend the run.
    NotReached { t_max: f64 },
}

impl DelayTime {
    pub fn time(self) -> Option<f64> {
        match self {
            DelayTime::Reached { t, .. } => Some(t),
            DelayTime::NotReached { .. } => None,
        }
    }
}

/// First time at which `<Jz>` reaches zero, by linear interpolation between
/// the bracketing samples. Works in raw or scaled units.
pub fn effective_delay_time(series: &TimeSeries) -> Result<DelayTime> {
    let jz = series.require(Observable::Jz)?;
    let t = &series.t;
    match jz.first() {
        Some(v) if *v > 0.0 => {}
        Some(v) => return Err(Error::Domain(format!("<Jz> must start positive, got {v}"))),
        None => return Err(Error::Series("empty series".into())),
    }
    for i in 1..jz.len() {
        if jz[i] <= 0.0 {
            let (a, b) = (jz[i - 1], jz[i]);
            let frac = a / (a - b);
            let at = t[i - 1] + frac * (t[i] - t[i - 1]);
            return Ok(DelayTime::Reached {
                t: at,
                bracket: (t[i - 1], t[i]),
            });
        }
    }
    Ok(DelayTime::NotReached {
        t_max: *t.last().unwrap_or(&0.0),
    })
}

/// Samples inside a refinement bracket.
const REFINE_SAMPLES: usize = 65;

/// Re-solves `config` with a tenfold tighter tolerance and a dense grid
/// over the bracket of a coarse crossing.
pub fn refine_delay_time(config: &RunConfig, coarse: DelayTime) -> Result<DelayTime> {
    let (lo, hi) = match coarse {
        DelayTime::Reached { bracket, .. } => bracket,
        other => return Ok(other),
    };
    let mut grid = Vec::with_capacity(REFINE_SAMPLES + 1);
    if lo > 0.0 {
        grid.push(0.0);
    }
    grid.extend((0..REFINE_SAMPLES).map(|k| lo + (hi - lo) * k as f64 / (REFINE_SAMPLES - 1) as f64));
    let tight = RunConfig {
        rtol: (config.rtol / 10.0).max(1e-12),
        ..config.clone()
    };
    let series = run_on_grid(&tight, &grid)?;
    effective_delay_time(&series)
}
