//! Benchmark-only crate; the measurements live in `benches/pipeline.rs`.
//!
//! Run with `cargo bench -p vqcm-bench` (or `-- --test` for a quick
//! single-pass sanity check without statistics).
