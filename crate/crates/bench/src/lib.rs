//! Criterion benchmarks for precqaoa; see `benches/`.
