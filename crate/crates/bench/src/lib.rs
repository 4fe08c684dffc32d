//! Benchmarks for the transfer-matrix kernels live in `benches/`.
