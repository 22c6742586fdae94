//! Benchmarks for the hot paths of the pipeline; see `benches/pipeline.rs`.
