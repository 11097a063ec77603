//! Cross-solver acceptance checks, one function per criterion.

mod dynamics;
mod exact;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rates::RateSet;

pub use dynamics::{
    closure_convergence, crossover_grid, dilute_limit, fig2_small_n, pure_superfluorescence,
    trajectory_endpoint, peak,
};
pub use exact::{characteristic_points, combinatorics, generator_fidelity, oracle_equivalence, sum_rules};

/// `(gamma_S, gamma_L, gamma_D)` triples shared by the cross-solver checks.
pub const RATE_COMBINATIONS: [(f64, f64, f64); 5] =
    [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.1, 1.0), (1.0, 0.1, 10.0)];

pub fn rate_combinations() -> impl Iterator<Item = RateSet> {
    RATE_COMBINATIONS.iter().map(|&(s, l, d)| RateSet::new(s, l, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub(crate) fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        CriterionOutcome {
            id,
            name: name.into(),
            passed,
            detail,
            seconds: 0.0,
        }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {} [{:.1}s] {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "combinatorics"),
    (2, "oracle equivalence"),
    (3, "sum rules"),
    (4, "characteristic points"),
    (5, "pure superfluorescence"),
    (6, "small-N closures"),
    (7, "large-N closure agreement"),
    (8, "phase-diagram crossover"),
    (9, "trajectory endpoint"),
    (10, "bosonic dilute limit"),
    (11, "generator fidelity"),
];

/// Runs one criterion; an error counts as a failure and is reported in the
/// detail.
pub fn run_criterion(id: u32) -> Option<CriterionOutcome> {
    let name = CRITERIA.iter().find(|(k, _)| *k == id)?.1;
    let start = Instant::now();
    let result: Result<CriterionOutcome> = match id {
        1 => combinatorics(),
        2 => oracle_equivalence(),
        3 => sum_rules(),
        4 => characteristic_points(),
        5 => pure_superfluorescence(),
        6 => fig2_small_n(),
        7 => closure_convergence(),
        8 => crossover_grid(),
        9 => trajectory_endpoint(),
        10 => dilute_limit(),
        11 => generator_fidelity(),
        _ => unreachable!(),
    };
    let mut outcome = result.unwrap_or_else(|e| CriterionOutcome::new(id, name, false, format!("error: {e}")));
    outcome.seconds = start.elapsed().as_secs_f64();
    Some(outcome)
}

pub use rayon::ThreadPool;

/// A dedicated pool of `k` workers (at least one).
pub fn thread_pool(k: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(k.max(1))
        .build()
        .map_err(|e| crate::error::Error::Domain(format!("cannot start {k} workers: {e}")))
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().filter_map(|(id, _)| run_criterion(*id)).collect()
}
