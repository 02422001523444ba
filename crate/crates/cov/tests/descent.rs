use ht_cov::{estimate_covariance, CovConfig};
use ht_sampler::{sample_dist, DistKind, DistSpec};
use nalgebra::{DMatrix, DVector};

/// Point-mass data: all Z_i = vv^T, and the descent converges to vv^T.
#[test]
fn point_mass_recovers_outer_product() {
    let v = DVector::from_vec(vec![1.0, 2.0]);
    let spec = DistSpec::new(DistKind::PointMass(v.clone()), 2).unwrap();
    let data = sample_dist(&spec, 40, 0).unwrap();
    let cfg = CovConfig {
        k: 4,
        alpha: f64::INFINITY,
        epsilon: 1e-4,
        r_min: 1e-5,
        ..CovConfig::default()
    };
    let est = estimate_covariance(&data, &cfg).unwrap();
    let vvt = &v * v.transpose();
    let err = (&est.sigma_hat - &vvt).abs().max();
    assert!(err < 1e-3, "error {err} after {} iterations", est.iterations);
}

/// nit = 0: the loop-free contract returns Sigma_0 = 0 and its distance.
#[test]
fn zero_iteration_budget_returns_origin() {
    let spec = DistSpec::new(DistKind::Gaussian, 2).unwrap();
    let data = sample_dist(&spec, 200, 3).unwrap();
    let cfg = CovConfig {
        k: 4,
        nit: Some(0),
        ..CovConfig::default()
    };
    let est = estimate_covariance(&data, &cfg).unwrap();
    assert!(est.sigma_hat.abs().max() == 0.0);
    assert_eq!(est.trace.len(), 1);
    assert!(est.d_star > 0.5, "distance from 0 to ~I should be ~1");
}

/// Gaussian end-to-end at modest size: spectral error within 0.5, and the
/// Frobenius distance to the bucket consensus is nonincreasing over the
/// far-regime prefix of the trace.
#[test]
fn gaussian_end_to_end_with_contraction() {
    let spec = DistSpec::new(DistKind::Gaussian, 3).unwrap();
    let mut ok = 0;
    let mut contraction_ok = 0;
    let trials = 4;
    for seed in 0..trials {
        let n = 3000;
        let k = 10;
        let data = sample_dist(&spec, n, seed as u64).unwrap();
        let alpha = ht_sampler::compute_truncation_alpha(
            spec.trace_sigma(),
            spec.opnorm_sigma(),
            spec.l_constant(),
            n,
            k,
        );
        let cfg = CovConfig {
            k,
            alpha,
            ..CovConfig::default()
        };
        let est = estimate_covariance(&data, &cfg).unwrap();
        let err = {
            let diff = &est.sigma_hat - DMatrix::identity(3, 3);
            let eig = nalgebra::SymmetricEigen::new(diff);
            eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
        };
        if err <= 0.5 {
            ok += 1;
        }

        // Far-regime contraction toward the truncated bucket consensus.
        let summary = ht_sampler::make_buckets(&data, k, alpha).unwrap();
        let target = summary.mean();
        let final_d = est.trace.last().unwrap().1.max(est.d_star);
        let mut nonincreasing = true;
        let mut prev = f64::INFINITY;
        for ((_, d_t), x_t) in est.trace.iter().zip(&est.iterates) {
            if *d_t < 1.5 * final_d {
                break; // left the far regime
            }
            let fdist = (x_t - &target).norm();
            if fdist > prev + 1e-9 {
                nonincreasing = false;
            }
            prev = fdist;
        }
        if nonincreasing {
            contraction_ok += 1;
        }
    }
    assert!(ok >= trials - 1, "only {ok}/{trials} trials within 0.5");
    assert!(
        contraction_ok >= trials - 1,
        "contraction held in {contraction_ok}/{trials}"
    );
}
