//! One simulation, described declaratively and dispatched to a solver tier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bosonic::{evolve_bright_dark, map_exact, BosonicPath, BrightDarkState, DILUTE_THRESHOLD};
use crate::dicke::DickeIndex;
use crate::error::{Error, Result};
use crate::moments::{closed_system, integrate, MomentOptions, MomentState};
use crate::oracle::{build_dicke_basis, build_operators, evolve, OracleOptions, DEFAULT_MAX_SPINS};
use crate::piqs::{evolve_populations, initial_dicke_state, PiqsOptions};
use crate::rates::RateSet;
use crate::series::{uniform_grid, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolverKind {
    Oracle,
    Piqs,
    /// Closed moment hierarchy of the given order.
    Cumulant(u32),
    Bosonic,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Oracle => write!(f, "oracle"),
            SolverKind::Piqs => write!(f, "piqs"),
            SolverKind::Cumulant(k) => write!(f, "cumulant{k}"),
            SolverKind::Bosonic => write!(f, "bosonic"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SolverKind::Oracle),
            "piqs" => Ok(SolverKind::Piqs),
            "bosonic" => Ok(SolverKind::Bosonic),
            _ => s
                .strip_prefix("cumulant")
                .and_then(|k| k.parse::<u32>().ok())
                .filter(|k| *k >= 1)
                .map(SolverKind::Cumulant)
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "unknown solver {s:?} (expected oracle, piqs, cumulant1, cumulant2 or bosonic)"
                    ))
                }),
        }
    }
}

impl From<SolverKind> for String {
    fn from(s: SolverKind) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for SolverKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Dicke(DickeIndex),
    BrightDark { n_b: f64, n_d: f64 },
}

impl InitialState {
    pub fn excited(n: u32) -> Self {
        InitialState::Dicke(DickeIndex::excited(n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub n: u32,
    pub rates: RateSet,
    pub initial: InitialState,
    pub t_max: f64,
    pub samples: usize,
    pub rtol: f64,
    /// Emit the scaled convention instead of raw expectation values.
    #[serde(default)]
    pub normalize: bool,
}

impl RunConfig {
    /// A run from full inversion with 401 samples at `rtol = 1e-9`.
    pub fn new(solver: SolverKind, n: u32, rates: RateSet, t_max: f64) -> Self {
        RunConfig {
            solver,
            n,
            rates,
            initial: InitialState::excited(n),
            t_max,
            samples: 401,
            rtol: 1e-9,
            normalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        self.rates.validate_for_evolution()?;
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::Domain(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.samples < 2 {
            return Err(Error::Domain("at least two samples are needed".into()));
        }
        if !(1e-12..=1e-3).contains(&self.rtol) {
            return Err(Error::Domain(format!("rtol {} outside [1e-12, 1e-3]", self.rtol)));
        }
        if self.solver == SolverKind::Oracle && self.n > DEFAULT_MAX_SPINS {
            return Err(Error::ResourceLimit {
                what: "N for the oracle",
                requested: self.n as usize,
                cap: DEFAULT_MAX_SPINS as usize,
            });
        }
        match (self.solver, self.initial) {
            (SolverKind::Bosonic, InitialState::BrightDark { n_b, n_d }) => {
                BrightDarkState::new(self.n, n_b, n_d)?;
            }
            (_, InitialState::BrightDark { .. }) => {
                return Err(Error::Domain(format!(
                    "the {} solver needs a Dicke initial state",
                    self.solver
                )));
            }
            (_, InitialState::Dicke(idx)) => idx.check(self.n)?,
        }
        if self.solver == SolverKind::Bosonic {
            let state = self.bright_dark_start()?;
            if !state.is_dilute(DILUTE_THRESHOLD) {
                return Err(Error::Domain(format!(
                    "the bosonic solver needs a dilute start, got {} excitations on {} emitters",
                    state.excitations(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    fn dicke_start(&self) -> Result<DickeIndex> {
        match self.initial {
            InitialState::Dicke(idx) => {
                idx.check(self.n)?;
                Ok(idx)
            }
            InitialState::BrightDark { .. } => Err(Error::Domain("not a Dicke initial state".into())),
        }
    }

    fn bright_dark_start(&self) -> Result<BrightDarkState> {
        match self.initial {
            InitialState::BrightDark { n_b, n_d } => BrightDarkState::new(self.n, n_b, n_d),
            InitialState::Dicke(idx) => {
                let (n_b, n_d) = map_exact(idx, self.n)?;
                BrightDarkState::new(self.n, n_b, n_d.max(0.0))
            }
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.t_max, self.samples)
    }
}

/// Runs `config` on its uniform grid.
pub fn run(config: &RunConfig) -> Result<TimeSeries> {
    run_on_grid(config, &config.grid()?)
}

/// Runs `config` on an explicit grid starting at 0; `t_max` and `samples`
/// are ignored.
pub fn run_on_grid(config: &RunConfig, t_grid: &[f64]) -> Result<TimeSeries> {
    config.validate()?;
    if t_grid.first() != Some(&0.0) {
        return Err(Error::Domain("time grid must start at 0".into()));
    }
    let rates = &config.rates;
    let mut series = match config.solver {
        SolverKind::Oracle => {
            let basis = build_dicke_basis(config.n)?;
            let ops = build_operators(config.n)?;
            let rho0 = basis.dicke_density(config.dicke_start()?)?;
            let opts = OracleOptions {
                rtol: config.rtol,
                monitor_positivity: config.n <= 6,
                keep_snapshots: false,
            };
            evolve(&rho0, rates, &ops, t_grid, &opts)?.series
        }
        SolverKind::Piqs => {
            let p0 = initial_dicke_state(config.n, config.dicke_start()?)?;
            evolve_populations(&p0, rates, t_grid, &PiqsOptions::with_rtol(config.rtol))?.series
        }
        SolverKind::Cumulant(order) => {
            let system = closed_system(order)?;
            let y0 = MomentState::from_dicke(config.n, config.dicke_start()?, &system.tracked);
            let opts = MomentOptions {
                normalize: false,
                ..MomentOptions::with_rtol(config.rtol)
            };
            integrate(&system, &y0, rates, t_grid, &opts)?.series
        }
        SolverKind::Bosonic => {
            evolve_bright_dark(&config.bright_dark_start()?, rates, t_grid, BosonicPath::Numeric, config.rtol)?.series
        }
    };
    series.meta.config = serde_json::to_value(config)?;
    if config.normalize {
        series = series.to_scaled()?;
    }
    Ok(series)
}
