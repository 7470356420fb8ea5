//! Benchmark-only crate; benchmarks live in the benches directory.
