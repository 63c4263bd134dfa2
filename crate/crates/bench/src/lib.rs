//! Criterion benchmarks for the structured and dense solvers; see `benches/`.
