//! Benchmarks for the solver tiers; see `benches/`.
