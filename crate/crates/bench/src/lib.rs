//! Criterion benchmarks for the classifiers and the testpoint search live in `benches/`.
