//! Criterion benchmarks for `vpq-core`; see `benches/vpq.rs`.
