//! Benchmark-only crate; see `benches/linksim.rs`.
