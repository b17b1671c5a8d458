//! Metrics and the comparative benchmark protocol.

pub mod benchmark;
pub mod metrics;

pub use benchmark::{
    run_benchmark, run_seed, BenchmarkCell, BenchmarkConfig, BenchmarkFailure, BenchmarkResult, BenchmarkRow, Method,
    Summary,
};
pub use metrics::{accuracy, equal_error_rate, error_tradeoff, roc_auc};
