//! Benchmarks for the LP-backed bounds and measures live in `benches/`.
