//! Benchmark harness and shared plumbing for the `ht` command-line tool:
//! the one-dimensional median of means, tail-probability benchmarks
//! comparing classical and bucketed estimators, CSV/report formatting, and
//! the flat key-value config file.

mod bench;
mod config;
pub mod report;

pub use bench::{
    median_of_means_1d, quantile_index, report_to_csv, run_tail_benchmark, BenchConfig, BenchDist,
    BenchError, BenchReport, BenchRow, BenchTask,
};
pub use config::FileConfig;

// Dataset text I/O, re-exported so harness users need only this crate.
pub use ht_sampler::{read_dataset, write_dataset};
