//! Criterion benchmarks for twistlab; see `benches/`.
