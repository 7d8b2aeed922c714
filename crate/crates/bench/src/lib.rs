//! Criterion benchmarks for the tree pricer, the tail fit and backpropagation.
//! Run with `cargo bench -p evtail-bench`.
