//! Criterion benchmarks for the sv-process toolkit; see `benches/`.
