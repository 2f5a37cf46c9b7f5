//! Criterion benchmarks for the hfnet kernels; see `benches/`.
