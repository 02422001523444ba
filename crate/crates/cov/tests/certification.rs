use ht_cov::{dist_est, grad_est, test_cov_value, CovConfig, Sign};
use ht_sos::BasisMode;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn e1e1(d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(0, 0)] = 1.0;
    m
}

fn spiked_buckets(d: usize, k: usize, s: f64) -> Vec<DMatrix<f64>> {
    (0..k)
        .map(|_| DMatrix::identity(d, d) + e1e1(d) * s)
        .collect()
}

/// All Z_i = x: the constraint forces pE[b_i] = 0 at any positive radius.
#[test]
fn zero_deviation_gives_zero_value() {
    let cfg = CovConfig::default();
    let x = DMatrix::identity(3, 3);
    let buckets = vec![x.clone(); 5];
    for sign in [Sign::Pos, Sign::Neg] {
        let res = test_cov_value(&buckets, &x, 0.1, sign, &cfg).unwrap();
        assert!(res.value.abs() < 1e-5, "{:?}: {}", sign, res.value);
        assert!(res.value >= -1e-6 && res.value <= 5.0 + 1e-6);
    }
}

/// All Z_i = x + s e1 e1^T at radius s/2: the positive program caps at k,
/// and the negative program (which needs <x - Z_i, uu^T> >= r > 0) is forced
/// to zero. The sign separation needs the full basis, where the moment
/// matrix certifies pE[b_i u_j^2] >= 0.
#[test]
fn one_direction_spike_sign_separation() {
    let cfg = CovConfig {
        basis: BasisMode::Full,
        ..CovConfig::default()
    };
    let d = 2;
    let k = 4;
    let s = 0.8;
    let x = DMatrix::identity(d, d);
    let buckets = spiked_buckets(d, k, s);

    let pos = test_cov_value(&buckets, &x, s / 2.0, Sign::Pos, &cfg).unwrap();
    assert!((pos.value - k as f64).abs() < 1e-4, "pos {}", pos.value);

    let neg = test_cov_value(&buckets, &x, s / 2.0, Sign::Neg, &cfg).unwrap();
    assert!(neg.value.abs() < 1e-4, "neg {}", neg.value);
}

/// Value is nonincreasing in r (tested over a grid).
#[test]
fn value_monotone_in_radius() {
    let cfg = CovConfig::default();
    let d = 2;
    let k = 4;
    let x = DMatrix::identity(d, d);
    let buckets = spiked_buckets(d, k, 0.5);
    let mut prev = f64::INFINITY;
    for i in 0..8 {
        let r = 0.05 * 2.0f64.powi(i);
        let res = test_cov_value(&buckets, &x, r, Sign::Pos, &cfg).unwrap();
        assert!(res.value <= prev + 1e-6, "r={r}: {} vs prev {prev}", res.value);
        prev = res.value;
    }
}

/// Bounded differences: replacing one bucket by an arbitrary PSD matrix
/// changes value/k by at most 1/k (plus solver tolerance).
#[test]
fn bounded_differences_single_bucket() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let cfg = CovConfig::default();
    let d = 2;
    let k = 5;
    let x = DMatrix::identity(d, d);
    for _ in 0..4 {
        let mut buckets: Vec<DMatrix<f64>> = (0..k)
            .map(|_| {
                let mut g = DMatrix::<f64>::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        g[(i, j)] = rng.gen_range(-0.5..0.5);
                    }
                }
                DMatrix::identity(d, d) + &g * g.transpose()
            })
            .collect();
        let r = 0.3;
        let base = test_cov_value(&buckets, &x, r, Sign::Pos, &cfg).unwrap();
        let mut rep = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rep[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let rep = &rep * rep.transpose() * 2.0;
        buckets[rng.gen_range(0..k)] = rep;
        let changed = test_cov_value(&buckets, &x, r, Sign::Pos, &cfg).unwrap();
        let delta = (base.value - changed.value).abs() / k as f64;
        assert!(delta <= 1.0 / k as f64 + 1e-6, "delta {delta}");
    }
}

/// dist_est on the one-direction instance returns approximately s; on the
/// zero instance it returns r_min; on the half/half instance it collapses.
#[test]
fn distance_estimates() {
    let cfg = CovConfig::default();
    let d = 2;
    let k = 6;
    let x = DMatrix::identity(d, d);

    // No deviation at any radius.
    let buckets = vec![x.clone(); k];
    assert_eq!(dist_est(&buckets, &x, &cfg), cfg.r_min);

    // One-direction deviation of size s = 0.5 with a 1% grid.
    let s = 0.5;
    let buckets = spiked_buckets(d, k, s);
    let est = dist_est(&buckets, &x, &cfg);
    assert!(est >= 0.95 * s && est <= 1.05 * s, "est {est}");

    // Half at +s, half at -s: each sign program caps near k/2 < accept*k at
    // radii near s, so the estimate collapses well below s/2.
    let mut buckets = Vec::new();
    for i in 0..k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        buckets.push(DMatrix::identity(d, d) + e1e1(d) * (s * sign));
    }
    let est = dist_est(&buckets, &x, &cfg);
    assert!(est < s / 2.0, "mixed-sign est {est}");
}

/// Gradient direction on one-direction instances: +- e1 e1^T, nuclear norm 1.
#[test]
fn gradient_directions() {
    let cfg = CovConfig::default();
    let d = 3;
    let k = 5;
    let s = 0.6;
    let x = DMatrix::identity(d, d);

    let buckets = spiked_buckets(d, k, s);
    let (g, _) = grad_est(&buckets, &x, &cfg).unwrap();
    let target = e1e1(d);
    assert!((&g - &target).abs().max() < 1e-2, "G = {g}");
    let eig = nalgebra::SymmetricEigen::new(g.clone());
    let nuclear: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    assert!((nuclear - 1.0).abs() < 1e-4);

    let buckets: Vec<DMatrix<f64>> = (0..k)
        .map(|_| DMatrix::identity(d, d) - e1e1(d) * s)
        .collect();
    let (g, _) = grad_est(&buckets, &x, &cfg).unwrap();
    assert!((&g + &target).abs().max() < 1e-2, "G = {g}");
    let eig = nalgebra::SymmetricEigen::new(g.clone());
    let nuclear: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    assert!((nuclear - 1.0).abs() < 1e-4);
}

/// Synthetic one-spike instances with small bucket noise: the distance
/// estimate brackets the true distance and the gradient correlates with the
/// offset direction.
#[test]
fn distance_sandwich_and_gradient_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = CovConfig::default();
    let d = 3;
    let k = 6;
    for &s in &[0.5f64, 1.0] {
        let mut ok = 0;
        for _ in 0..5 {
            let mut v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0f64));
            v /= v.norm();
            let spike = &v * v.transpose() * s;
            let sigma_t = DMatrix::identity(d, d);
            let buckets: Vec<DMatrix<f64>> = (0..k)
                .map(|_| {
                    let mut e = DMatrix::<f64>::zeros(d, d);
                    for i in 0..d {
                        for j in i..d {
                            let val = rng.gen_range(-0.02..0.02);
                            e[(i, j)] = val;
                            e[(j, i)] = val;
                        }
                    }
                    &sigma_t + e
                })
                .collect();
            let x = &sigma_t - &spike;
            let est = dist_est(&buckets, &x, &cfg);
            let (g, _) = grad_est(&buckets, &x, &cfg).unwrap();
            let corr = (g.transpose() * (&sigma_t - &x)).trace();
            if est >= 0.7 * s && est <= 1.3 * s && corr >= 0.4 * s {
                ok += 1;
            }
        }
        assert!(ok >= 4, "s={s}: only {ok}/5 trials in bounds");
    }
}
