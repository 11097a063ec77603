//! Quantum numbers, degeneracies and single-state rates of the Dicke space.

mod algebra;
mod degeneracy;
mod index;

pub use algebra::{
    boundary_j, delay_time_pure, dephasing_threshold, emission_rate, ladder_coefficient,
    state_derivatives, state_derivatives_at, Boundary, ChannelParts, Ladder, StateDerivatives,
};
pub use degeneracy::{binomial, degeneracy_dj, degeneracy_dm, BigCount};
pub use index::{dicke_position, dicke_space_len, enumerate_dicke_space, j_min, DickeIndex, HalfInt};
