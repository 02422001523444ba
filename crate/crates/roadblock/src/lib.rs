//! The single-spike block mixtures testbed: d blocks of m Gaussian samples
//! whose per-block covariance is either the identity (null) or
//! Id + s_i lambda x x^T for a hidden hypercube spike x and signs s_i
//! (planted). Includes an exponential-time subset spectral test, a
//! relaxation-based polynomial-time test, and the Hermite moment sums that
//! measure low-degree distinguishability.

mod hermite;
mod mixture;

pub use hermite::{
    hermite_planted_moment, hermite_single_moment, low_degree_norm, HermiteIndex, MatrixIndex,
};
pub use mixture::{
    gen_block_mixture, sos_spike_test, sos_spike_value, subset_spectral_test,
    subset_spectral_test_from_deviations, BlockMixtureInstance, Label, RoadblockError,
};
