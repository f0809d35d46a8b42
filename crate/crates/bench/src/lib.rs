//! Criterion benchmarks for the kdvsat kernels live under `benches/`.
