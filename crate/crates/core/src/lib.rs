//! Collective radiative decay of `N` two-level emitters under local dephasing
//! and nonradiative loss.

pub mod analysis;
pub mod bosonic;
pub mod dicke;
pub mod error;
pub mod fit;
pub mod moments;
pub mod ode;
pub mod oracle;
pub mod piqs;
pub mod rates;
pub mod run;
pub mod series;
pub mod validation;

pub use dicke::{DickeIndex, HalfInt};
pub use error::{Error, Result};
pub use rates::{Channel, RateSet};
pub use series::{Observable, TimeSeries};
pub use run::{run, run_on_grid, InitialState, RunConfig, SolverKind};
