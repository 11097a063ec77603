//! Adaptive Dormand–Prince 5(4) integration onto a fixed output grid.

use crate::error::{Error, Result};

/// A first-order system `dy/dt = f(t, y)` over real state vectors.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the initial slope when `None`.
    pub h_init: Option<f64>,
    /// Steps below this floor (relative to the integration span) count as a collapse.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_min_rel: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        OdeOptions {
            rtol,
            atol: (rtol * 1e-3).max(1e-15),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub h_last: f64,
}

/// Why a run stopped before the end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    StepCollapse { t: f64, h: f64 },
    TooManySteps { t: f64 },
}

impl From<StepFailure> for Error {
    fn from(f: StepFailure) -> Error {
        match f {
            StepFailure::StepCollapse { t, h } => Error::Integration {
                t,
                reason: format!("step size collapsed to {h:e}"),
            },
            StepFailure::TooManySteps { t } => Error::Integration {
                t,
                reason: "step budget exhausted".into(),
            },
        }
    }
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `system` from `t_grid[0]`, calling `observe(t, y)` at every grid
/// time (the first call receives `y0`). The observer may abort the run by
/// returning an error.
///
/// On a step-size collapse the state reached so far is left in `y` and the
/// failure is returned, so callers can switch to another scheme.
pub fn integrate<S, F>(
    system: &S,
    y: &mut Vec<f64>,
    t_grid: &[f64],
    opts: &OdeOptions,
    mut observe: F,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    check_grid(t_grid)?;
    if y.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: y.len(),
        });
    }
    observe(t_grid[0], y)?;
    let mut stepper = Dopri5::new(system, opts, t_grid[0], y)?;
    for &t_out in &t_grid[1..] {
        stepper.advance_to(t_out, y).map_err(Error::from)?;
        observe(t_out, y)?;
    }
    Ok(stepper.stats)
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Stateful stepper, exposed so that solvers can interleave their own checks
/// or fall back to another scheme part-way through a grid.
pub struct Dopri5<'a, S: OdeSystem + ?Sized> {
    system: &'a S,
    opts: OdeOptions,
    t: f64,
    h: f64,
    h_min: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
    pub stats: OdeStats,
}

impl<'a, S: OdeSystem + ?Sized> Dopri5<'a, S> {
    pub fn new(system: &'a S, opts: &OdeOptions, t0: f64, y0: &[f64]) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        let n = system.dim();
        let mut s = Dopri5 {
            system,
            opts: *opts,
            t: t0,
            h: 0.0,
            h_min: 0.0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
            fsal_valid: false,
            stats: OdeStats::default(),
        };
        s.system.rhs(t0, y0, &mut s.k[0]);
        s.stats.rhs_evals += 1;
        s.fsal_valid = true;
        s.h = match opts.h_init {
            Some(h) => h,
            None => s.initial_step(y0),
        };
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    fn initial_step(&self, y0: &[f64]) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in y0.iter().zip(&self.k[0]) {
            let sc = self.opts.atol + self.opts.rtol * yi.abs();
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let n = y0.len().max(1) as f64;
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
    }

    fn error_norm(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7;
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(self.y_new[i].abs());
            acc += (self.h * e / sc).powi(2);
        }
        (acc / y.len().max(1) as f64).sqrt()
    }

    /// Advances the solution in `y` from the current time to `t_out`, landing
    /// exactly on it.
    pub fn advance_to(&mut self, t_out: f64, y: &mut [f64]) -> std::result::Result<(), StepFailure> {
        let span = (t_out - self.t).abs().max(self.t.abs()).max(f64::MIN_POSITIVE);
        self.h_min = self.opts.h_min_rel * span;
        let n = y.len();
        while self.t < t_out {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(StepFailure::TooManySteps { t: self.t });
            }
            let remaining = t_out - self.t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h_suggested = self.h;
            if last {
                self.h = remaining;
            }
            let h = self.h;
            if !self.fsal_valid {
                self.system.rhs(self.t, y, &mut self.k[0]);
                self.stats.rhs_evals += 1;
                self.fsal_valid = true;
            }
            let t = self.t;
            let stages: [(f64, &[f64]); 5] = [
                (C2, &[A21]),
                (C3, &[A31, A32]),
                (C4, &[A41, A42, A43]),
                (C5, &[A51, A52, A53, A54]),
                (1.0, &[A61, A62, A63, A64, A65]),
            ];
            for (s, (c, a)) in stages.iter().enumerate() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (l, al) in a.iter().enumerate() {
                        acc += al * self.k[l][i];
                    }
                    self.y_stage[i] = y[i] + h * acc;
                }
                self.system.rhs(t + c * h, &self.y_stage, &mut self.k[s + 1]);
            }
            for i in 0..n {
                self.y_new[i] = y[i]
                    + h * (B1 * self.k[0][i]
                        + B3 * self.k[2][i]
                        + B4 * self.k[3][i]
                        + B5 * self.k[4][i]
                        + B6 * self.k[5][i]);
            }
            self.system.rhs(t + h, &self.y_new, &mut self.k[6]);
            self.stats.rhs_evals += 6;

            let err = self.error_norm(y);
            if err.is_finite() && err <= 1.0 {
                self.t = if last { t_out } else { t + h };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                self.stats.h_last = h;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a step shortened to hit the output time should not shrink the next one
                self.h = if last { h_suggested.max(h * factor) } else { h * factor };
            } else {
                self.stats.rejected += 1;
                let factor = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                self.h = h * factor;
                if self.h < self.h_min {
                    return Err(StepFailure::StepCollapse { t: self.t, h: self.h });
                }
            }
        }
        Ok(())
    }
}
