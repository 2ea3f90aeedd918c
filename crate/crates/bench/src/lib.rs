//! Benchmarks for limitlens-core live in `benches/`; run them with `cargo bench -p limitlens-bench`.
