//! Bright and dark excitation populations in the dilute limit.

mod validate;

pub use validate::{validate_against_full, BosonicReport, DeviationSummary, PopulationMap, ValidationOptions};

use serde::{Deserialize, Serialize};

use crate::dicke::DickeIndex;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, OdeStats, OdeSystem};
use crate::rates::RateSet;
use crate::series::{Observable, SeriesMeta, TimeSeries};

/// Excitation fraction below which a state counts as dilute.
pub const DILUTE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightDarkState {
    pub n: u32,
    pub time: f64,
    pub n_b: f64,
    pub n_d: f64,
}

impl BrightDarkState {
    pub fn new(n: u32, n_b: f64, n_d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        if !(n_b.is_finite() && n_d.is_finite() && n_b >= 0.0 && n_d >= 0.0) {
            return Err(Error::Domain(format!(
                "bright/dark populations must be finite and non-negative, got ({n_b}, {n_d})"
            )));
        }
        Ok(BrightDarkState { n, time: 0.0, n_b, n_d })
    }

    pub fn excitations(&self) -> f64 {
        self.n_b + self.n_d
    }

    pub fn is_dilute(&self, threshold: f64) -> bool {
        self.excitations() / self.n as f64 <= threshold
    }
}

/// `n_b = [j(j+1) - m^2 + m] / N`, `n_d = m + N/2 - n_b` at a point of the
/// triangle (not necessarily quantized).
pub fn map_exact_at(j: f64, m: f64, n: u32) -> (f64, f64) {
    let nf = n as f64;
    let n_b = (j * (j + 1.0) - m * m + m) / nf;
    (n_b, m + nf / 2.0 - n_b)
}

pub fn map_exact(idx: DickeIndex, n: u32) -> Result<(f64, f64)> {
    idx.check(n)?;
    // (j + m)(j - m + 1) in doubled integers keeps the bright count exact
    let (j2, m2) = (idx.j.doubled(), idx.m.doubled());
    let quad = (j2 + m2) * (j2 - m2 + 2);
    let n_b = quad as f64 / (4.0 * n as f64);
    let exc = (m2 + n as i64) as f64 / 2.0;
    Ok((n_b, exc - n_b))
}

/// Dominant-order mapping `(j + m, N/2 - j)`.
pub fn map_leading(idx: DickeIndex, n: u32) -> Result<(f64, f64)> {
    idx.check(n)?;
    let (j2, m2) = (idx.j.doubled(), idx.m.doubled());
    Ok(((j2 + m2) as f64 / 2.0, (n as i64 - j2) as f64 / 2.0))
}

/// Decay rate of the bright mode, `N gamma_S + gamma_D + gamma_L`.
pub fn bright_decay_rate(rates: &RateSet, n: u32) -> f64 {
    n as f64 * rates.gamma_s + rates.gamma_d + rates.gamma_l
}

struct RateEquations {
    gamma_b: f64,
    gamma_l: f64,
    gamma_d: f64,
}

impl OdeSystem for RateEquations {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -self.gamma_b * y[0];
        dy[1] = -self.gamma_l * y[1] + self.gamma_d * y[0];
    }
}

/// Closed-form populations at time `t`.
pub fn bright_dark_at(state0: &BrightDarkState, rates: &RateSet, t: f64) -> (f64, f64) {
    let gb = bright_decay_rate(rates, state0.n);
    let gl = rates.gamma_l;
    let dt = t - state0.time;
    let n_b = state0.n_b * (-gb * dt).exp();
    let x = gb - gl;
    // (1 - e^{-x t}) / x, tending to t as x -> 0
    let transfer = if (x * dt).abs() < 1e-12 { dt } else { -(-x * dt).exp_m1() / x };
    let n_d = (-gl * dt).exp() * (state0.n_d + state0.n_b * rates.gamma_d * transfer);
    (n_b, n_d)
}

/// How the rate equations are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BosonicPath {
    Numeric,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct BosonicRun {
    pub series: TimeSeries,
    pub stats: Option<OdeStats>,
}

pub fn evolve_bright_dark(
    state0: &BrightDarkState,
    rates: &RateSet,
    t_grid: &[f64],
    path: BosonicPath,
    rtol: f64,
) -> Result<BosonicRun> {
    rates.validate()?;
    BrightDarkState::new(state0.n, state0.n_b, state0.n_d)?;
    crate::ode::check_grid(t_grid)?;
    if !state0.is_dilute(DILUTE_THRESHOLD) {
        log::warn!(
            "{} excitations on {} emitters is outside the dilute regime",
            state0.excitations(),
            state0.n
        );
    }
    let mut nb = Vec::with_capacity(t_grid.len());
    let mut nd = Vec::with_capacity(t_grid.len());
    let stats = match path {
        BosonicPath::ClosedForm => {
            for &t in t_grid {
                let (b, d) = bright_dark_at(state0, rates, t);
                nb.push(b);
                nd.push(d);
            }
            None
        }
        BosonicPath::Numeric => {
            if (t_grid[0] - state0.time).abs() > 0.0 {
                return Err(Error::Domain("time grid must start at the initial state's time".into()));
            }
            let system = RateEquations {
                gamma_b: bright_decay_rate(rates, state0.n),
                gamma_l: rates.gamma_l,
                gamma_d: rates.gamma_d,
            };
            let mut y = vec![state0.n_b, state0.n_d];
            let opts = OdeOptions {
                atol: rtol * 1e-3 * state0.excitations().max(1e-300),
                ..OdeOptions::with_rtol(rtol)
            };
            let stats = integrate(&system, &mut y, t_grid, &opts, |_, y| {
                nb.push(y[0]);
                nd.push(y[1]);
                Ok(())
            })?;
            Some(stats)
        }
    };
    let mut meta = SeriesMeta::new("bosonic", state0.n, rates);
    meta.config = serde_json::json!({ "path": path, "n_b0": state0.n_b, "n_d0": state0.n_d, "rtol": rtol });
    if let Some(s) = stats {
        if let serde_json::Value::Object(map) = serde_json::to_value(s)? {
            meta.diagnostics = map;
        }
    }
    let mut series = TimeSeries::new(t_grid.to_vec(), meta);
    series.push_column(Observable::Nb.name(), nb)?;
    series.push_column(Observable::Nd.name(), nd)?;
    Ok(BosonicRun { series, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{enumerate_dicke_space, HalfInt};
    use crate::series::uniform_grid;
    use proptest::prelude::*;

    #[test]
    fn single_excitations() {
        let n = 100;
        let bright = DickeIndex::new(n, HalfInt::half_of(n), HalfInt::from_int(-49)).unwrap();
        assert_eq!(map_exact(bright, n).unwrap(), (1.0, 0.0));
        let dark = DickeIndex::new(n, HalfInt::from_int(49), HalfInt::from_int(-49)).unwrap();
        assert_eq!(map_exact(dark, n).unwrap(), (0.0, 1.0));
        assert_eq!(map_leading(dark, n).unwrap(), (0.0, 1.0));
        assert_eq!(map_exact(DickeIndex::ground(n), n).unwrap(), (0.0, 0.0));
        assert_eq!(map_leading(DickeIndex::ground(n), n).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn leading_map_is_close_when_dilute() {
        let n = 200;
        let floor = -(n as i64) / 2;
        for idx in enumerate_dicke_space(n).unwrap() {
            let k = (idx.m.doubled() / 2 - floor) as f64;
            if k > 5.0 {
                continue;
            }
            let (b, d) = map_exact(idx, n).unwrap();
            let (lb, ld) = map_leading(idx, n).unwrap();
            let bound = 2.0 * k * k / n as f64;
            assert!((b - lb).abs() <= bound && (d - ld).abs() <= bound, "{idx}");
        }
    }

    #[test]
    fn paths_agree() {
        let grid = uniform_grid(0.5, 101).unwrap();
        for rates in [
            RateSet::new(1.0, 10.0, 100.0),
            RateSet::new(1.0, 10.0, 0.0),
            RateSet::new(0.0, 2.0, 0.0),
            RateSet::new(0.5, 0.0, 3.0),
        ] {
            let s0 = BrightDarkState::new(100, 1.0, 0.5).unwrap();
            let a = evolve_bright_dark(&s0, &rates, &grid, BosonicPath::Numeric, 1e-12).unwrap();
            let b = evolve_bright_dark(&s0, &rates, &grid, BosonicPath::ClosedForm, 1e-12).unwrap();
            for obs in [Observable::Nb, Observable::Nd] {
                for (x, y) in a.series.require(obs).unwrap().iter().zip(b.series.require(obs).unwrap()) {
                    assert!((x - y).abs() < 1e-9, "{rates:?} {obs:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn degenerate_transfer_limit() {
        // gamma_b = gamma_L needs N gamma_S + gamma_D = 0, so only n_d(0) survives.
        let s0 = BrightDarkState::new(10, 1.0, 2.0).unwrap();
        let (b, d) = bright_dark_at(&s0, &RateSet::new(0.0, 1.5, 0.0), 2.0);
        assert!((b - (-3.0f64).exp()).abs() < 1e-15);
        assert!((d - 2.0 * (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn negative_populations_rejected() {
        assert!(BrightDarkState::new(10, -0.1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn leading_map_counts_excitations(n in 1u32..300, pick in 0usize..10_000) {
            let states = enumerate_dicke_space(n).unwrap();
            let idx = states[pick % states.len()];
            let (b, d) = map_leading(idx, n).unwrap();
            prop_assert_eq!(b + d, idx.mf() + n as f64 / 2.0);
            let (eb, ed) = map_exact(idx, n).unwrap();
            prop_assert!((eb + ed - (idx.mf() + n as f64 / 2.0)).abs() < 1e-9 * n as f64);
        }

        #[test]
        fn populations_vanish_with_loss(gl in 0.1f64..5.0, gd in 0.0f64..5.0) {
            let s0 = BrightDarkState::new(50, 1.0, 1.0).unwrap();
            let (b, d) = bright_dark_at(&s0, &RateSet::new(1.0, gl, gd), 200.0 / gl);
            prop_assert!(b < 1e-12 && d < 1e-12);
        }
    }
}
