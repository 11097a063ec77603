//! Truncated moment hierarchy for the collective observables.

pub mod closed;
pub mod generator;
pub mod integrate;
pub mod keys;
pub mod poly;

pub use closed::{first_order_reference, rhs_first_order, rhs_second_order, second_order_reference};
pub use generator::{
    generate_system, key_derivative, monomial_derivative, tracked_set, unclosed_rhs, ChannelPolys, Closure,
    CompiledSystem, Equation, PeelOneFactor, SymbolicSystem, Term,
};
pub use integrate::{
    closed_system, integrate, integrate_with, solver_name, MomentOptions, MomentRun, MomentState, BOUND_TOLERANCE,
};
pub use keys::{cz_to_keys, key_to_cz, MomentKey};
pub use poly::{rational, CzPoly, Mono, NPoly, Rational};
