use serde::{Deserialize, Serialize};

use super::generator::{generate_system, CompiledSystem, PeelOneFactor, SymbolicSystem};
use super::poly::Mono;
use crate::dicke::DickeIndex;
use crate::error::{Error, Result};
use crate::ode::{integrate as ode_integrate, OdeOptions, OdeStats, OdeSystem};
use crate::rates::{Channel, RateSet};
use crate::series::{Observable, SeriesMeta, TimeSeries, NORMALIZATION_RAW, NORMALIZATION_SCALED};

/// Allowed excursion outside the physical region, in normalized units.
pub const BOUND_TOLERANCE: f64 = 1e-4;

const JZ2: Mono = Mono::new(0, 2);

/// Values of the tracked monomials at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub n: u32,
    pub time: f64,
    pub tracked: Vec<Mono>,
    pub values: Vec<f64>,
}

impl MomentState {
    /// Moments of the Dicke state `idx`.
    pub fn from_dicke(n: u32, idx: DickeIndex, tracked: &[Mono]) -> Self {
        let (j, m) = (idx.jf(), idx.mf());
        MomentState {
            n,
            time: 0.0,
            tracked: tracked.to_vec(),
            values: tracked.iter().map(|t| t.eval(j * (j + 1.0), m)).collect(),
        }
    }

    pub fn get(&self, m: Mono) -> Option<f64> {
        self.tracked.iter().position(|t| *t == m).map(|k| self.values[k])
    }

    pub fn jz(&self) -> f64 {
        self.get(Mono::Z).unwrap_or(f64::NAN)
    }

    pub fn j2(&self) -> f64 {
        self.get(Mono::C).unwrap_or(f64::NAN)
    }

    /// `<Jz^2>`, or `<Jz>^2` when it is not tracked.
    pub fn jz2(&self) -> f64 {
        self.get(JZ2).unwrap_or_else(|| self.jz() * self.jz())
    }

    /// `<J+J-> = <J^2> - <Jz^2> + <Jz>`.
    pub fn jpjm(&self) -> f64 {
        self.j2() - self.jz2() + self.jz()
    }

    /// Checks `|<Jz>| <= N/2` and `0 <= <J^2> <= (N/2)(N/2+1)` to `tol` in
    /// normalized units.
    pub fn check_bounds(&self, tol: f64) -> Result<()> {
        let half = self.n as f64 / 2.0;
        let top = half * (half + 1.0);
        let checks = [
            ("<Jz>", self.jz(), -half, half, half),
            ("<J^2>", self.j2(), 0.0, top, top),
        ];
        for (what, value, lo, hi, scale) in checks {
            let slack = tol * scale.max(f64::MIN_POSITIVE);
            if !(value >= lo - slack && value <= hi + slack) {
                return Err(Error::BoundViolation {
                    t: self.time,
                    what,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

/// The closed system at order `K` over all three channels with the default
/// closure.
pub fn closed_system(order: u32) -> Result<SymbolicSystem> {
    generate_system(order, &Channel::ALL, &PeelOneFactor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub rtol: f64,
    /// Emit columns in the scaled convention rather than raw values.
    pub normalize: bool,
    pub bound_tol: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            rtol: 1e-9,
            normalize: true,
            bound_tol: BOUND_TOLERANCE,
        }
    }
}

impl MomentOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        MomentOptions {
            rtol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct MomentRun {
    pub series: TimeSeries,
    pub final_state: MomentState,
    pub stats: OdeStats,
}

/// Solver label used in series metadata.
pub fn solver_name(order: u32) -> String {
    format!("cumulant{order}")
}

/// Integrates in variables divided by their natural size so that the error
/// control sees O(1) quantities at every `N`.
struct Scaled {
    compiled: CompiledSystem,
    scale: Vec<f64>,
}

impl OdeSystem for Scaled {
    fn dim(&self) -> usize {
        self.compiled.dim()
    }

    fn rhs(&self, _t: f64, u: &[f64], du: &mut [f64]) {
        let y: Vec<f64> = u.iter().zip(&self.scale).map(|(a, s)| a * s).collect();
        self.compiled.eval(&y, du);
        du.iter_mut().zip(&self.scale).for_each(|(d, s)| *d /= s);
    }
}

fn natural_scale(m: Mono, n: u32) -> f64 {
    let half = (n as f64 / 2.0).max(0.5);
    (half * (half + 1.0)).powi(m.c as i32) * half.powi(m.z as i32)
}

pub fn integrate_with<F>(
    system: &SymbolicSystem,
    y0: &MomentState,
    rates: &RateSet,
    t_grid: &[f64],
    options: &MomentOptions,
    mut observe: F,
) -> Result<OdeStats>
where
    F: FnMut(&MomentState) -> Result<()>,
{
    if !(1e-12..=1e-3).contains(&options.rtol) {
        return Err(Error::Domain(format!("rtol {} outside [1e-12, 1e-3]", options.rtol)));
    }
    rates.validate()?;
    if y0.tracked != system.tracked {
        return Err(Error::Domain("initial state does not track the system's moments".into()));
    }
    let mut state = y0.clone();
    state.check_bounds(options.bound_tol)?;
    let scale: Vec<f64> = system.tracked.iter().map(|m| natural_scale(*m, y0.n)).collect();
    let scaled = Scaled {
        compiled: system.compile(y0.n, rates),
        scale,
    };
    let mut u: Vec<f64> = y0.values.iter().zip(&scaled.scale).map(|(v, s)| v / s).collect();
    let ode_opts = OdeOptions::with_rtol(options.rtol);
    ode_integrate(&scaled, &mut u, t_grid, &ode_opts, |t, u| {
        state.time = t;
        for ((v, a), s) in state.values.iter_mut().zip(u).zip(&scaled.scale) {
            *v = a * s;
        }
        state.check_bounds(options.bound_tol)?;
        observe(&state)
    })
}

/// Runs the closed system and samples `<Jz>`, `<J^2>`, `<J+J->` and `<Jz^2>`.
pub fn integrate(
    system: &SymbolicSystem,
    y0: &MomentState,
    rates: &RateSet,
    t_grid: &[f64],
    options: &MomentOptions,
) -> Result<MomentRun> {
    let mut columns: [Vec<f64>; 4] = Default::default();
    let mut last = y0.clone();
    let stats = integrate_with(system, y0, rates, t_grid, options, |s| {
        for (col, v) in columns.iter_mut().zip([s.jz(), s.j2(), s.jpjm(), s.jz2()]) {
            col.push(v);
        }
        last.clone_from(s);
        Ok(())
    })?;
    let mut meta = SeriesMeta::new(&solver_name(system.order), y0.n, rates);
    meta.config = serde_json::json!({
        "order": system.order,
        "closure": system.closure,
        "tracked": system.tracked.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "rtol": options.rtol,
    });
    meta.diagnostics = match serde_json::to_value(stats)? {
        serde_json::Value::Object(map) => map,
        _ => unreachable!(),
    };
    let mut series = TimeSeries::new(t_grid.to_vec(), meta);
    let names = [Observable::Jz, Observable::J2, Observable::JpJm, Observable::Jz2];
    for (obs, col) in names.iter().zip(columns) {
        series.push_column(obs.name(), col)?;
    }
    debug_assert_eq!(series.meta.normalization, NORMALIZATION_RAW);
    if options.normalize {
        series = series.to_scaled()?;
        debug_assert_eq!(series.meta.normalization, NORMALIZATION_SCALED);
    }
    Ok(MomentRun {
        series,
        final_state: last,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::closed::{rhs_first_order, rhs_second_order};
    use crate::series::uniform_grid;

    #[test]
    fn compiled_systems_match_hand_coded() {
        let rates = RateSet::new(1.0, 0.37, 4.2);
        let n = 30;
        let first = closed_system(1).unwrap().compile(n, &rates);
        let second = closed_system(2).unwrap().compile(n, &rates);
        for &(jz, j2, jz2) in &[(15.0, 240.0, 225.0), (-3.5, 80.0, 20.0), (0.0, 100.0, 9.0)] {
            let mut d1 = [0.0; 2];
            first.eval(&[jz, j2], &mut d1);
            let h1 = rhs_first_order(jz, j2, &rates, n);
            let mut d2 = [0.0; 3];
            second.eval(&[jz, jz2, j2], &mut d2);
            let h2 = rhs_second_order(jz, j2, jz2, &rates, n);
            for (a, b) in d1.iter().zip(h1) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
            for (a, b) in d2.iter().zip([h2[0], h2[2], h2[1]]) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn ground_state_is_constant() {
        let n = 20;
        let sys = closed_system(2).unwrap();
        let y0 = MomentState::from_dicke(n, DickeIndex::ground(n), &sys.tracked);
        let run = integrate(&sys, &y0, &RateSet::new(1.0, 0.5, 3.0), &uniform_grid(5.0, 11).unwrap(), &MomentOptions::default())
            .unwrap();
        for v in run.series.require(Observable::Jz).unwrap() {
            assert!((v + 1.0).abs() < 1e-12);
        }
        for v in run.series.require(Observable::JpJm).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn loss_only_decay_is_exponential() {
        // With only local loss <Jz> + N/2 decays at gamma_L.
        let n = 12;
        let sys = closed_system(1).unwrap();
        let y0 = MomentState::from_dicke(n, DickeIndex::excited(n), &sys.tracked);
        let opts = MomentOptions {
            normalize: false,
            ..Default::default()
        };
        let grid = uniform_grid(2.0, 9).unwrap();
        let run = integrate(&sys, &y0, &RateSet::new(0.0, 0.8, 0.0), &grid, &opts).unwrap();
        for (t, jz) in grid.iter().zip(run.series.require(Observable::Jz).unwrap()) {
            let expect = n as f64 * (-0.8 * t).exp() - n as f64 / 2.0;
            assert!((jz - expect).abs() < 1e-7, "{t}: {jz} vs {expect}");
        }
    }

    #[test]
    fn bad_rtol_rejected() {
        let sys = closed_system(1).unwrap();
        let y0 = MomentState::from_dicke(4, DickeIndex::excited(4), &sys.tracked);
        let grid = uniform_grid(1.0, 3).unwrap();
        let err = integrate(&sys, &y0, &RateSet::new(1.0, 0.0, 0.0), &grid, &MomentOptions::with_rtol(0.1));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn bounds_checked() {
        let mut s = MomentState::from_dicke(10, DickeIndex::excited(10), &[Mono::Z, Mono::C]);
        assert!(s.check_bounds(1e-4).is_ok());
        s.values[0] = 5.01;
        assert!(matches!(s.check_bounds(1e-4), Err(Error::BoundViolation { what: "<Jz>", .. })));
    }
}
