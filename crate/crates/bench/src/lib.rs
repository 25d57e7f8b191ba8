//! Criterion benchmarks for the elemodds kernels; see `benches/`.
