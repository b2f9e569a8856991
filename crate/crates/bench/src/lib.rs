//! Criterion benchmarks for sasaki-core live in `benches/`.
