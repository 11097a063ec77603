//! Brute-force reference: full `2^N` density matrices under the three-channel
//! master equation, for small ensembles.

mod basis;
mod channels;
mod lindblad;
mod operators;
mod sparse;

pub use basis::{build_dicke_basis, build_dicke_basis_capped, BasisLabel, DickeBasis};
pub use channels::{measure_channel_rates, MeasuredRates};
pub use lindblad::{
    evolve, evolve_with, lindblad_rhs, DensityMatrix, DriftReport, OracleOptions, OracleRun,
    ABORT_DRIFT,
};
pub use operators::{
    build_operators, build_operators_capped, OpLabel, OperatorSet, ProductOperator,
    DEFAULT_MAX_SPINS,
};
pub use sparse::SparseMatrix;
