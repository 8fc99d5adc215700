//! Benchmarks live in `benches/`; run them with `cargo bench -p bohm2p-bench`.
