//! Criterion benchmarks for the `cubicstab-core` kernels live in `benches/`.
