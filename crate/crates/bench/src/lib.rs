//! Criterion benchmarks for `kzb-core`, under `benches/`.
