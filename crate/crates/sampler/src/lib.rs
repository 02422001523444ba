//! Samplers for heavy-tailed distributions with certifiable moment bounds,
//! norm truncation, bucket summaries, and the dataset text format.
//!
//! Every built-in generator is mean-zero (non-symmetric generators are
//! pair-differenced) and ships with analytic values for its covariance and
//! its eighth-to-second moment ratio, which the estimator configuration
//! needs.

mod bucket;
mod dataset;
mod spec;

pub use bucket::{make_buckets, truncate_samples, BucketSummary};
pub use dataset::{parse_dataset, read_dataset, write_dataset, Dataset};
pub use spec::{sample_dist, DistKind, DistSpec, SamplerError};

/// Truncation radius alpha = (L * opnorm * n / (tr * sqrt(k)))^{1/4} * sqrt(tr).
pub fn compute_truncation_alpha(tr_sigma: f64, op_norm: f64, l: f64, n: usize, k: usize) -> f64 {
    let ratio = l * op_norm * (n as f64) / (tr_sigma * (k as f64).sqrt());
    ratio.powf(0.25) * tr_sigma.sqrt()
}
