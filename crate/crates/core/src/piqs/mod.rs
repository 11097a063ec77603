//! Population dynamics on the Dicke triangle for permutation-symmetric,
//! Dicke-diagonal states.

mod closed_form;
mod evolve;
mod matrix;

pub use closed_form::{channel_rate_closed_form, total_outflow, transitions};
pub use evolve::{
    evolve_populations, evolve_populations_with, initial_dicke_state, PiqsDiagnostics, PiqsOptions,
    PiqsRun, PopulationVector, Stepper, NORMALIZATION_ABORT,
};
pub use matrix::{build_channel_matrix, build_rate_matrix, rate_matrix_dim, ChannelMatrix, RateMatrix};
