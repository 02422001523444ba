use ht_regress::{
    certify_done, descent_step, estimate_regression, noise_sdp_value, norm_sdp_value, ols_init,
    FitStatus, NormSide, RegConfig, RegDataset, StepOutcome,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

fn make_data(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    f_star: &DVector<f64>,
    noise: f64,
    k: usize,
) -> RegDataset {
    let x = gaussian_design(rng, n, d);
    let mut y = &x * f_star;
    if noise > 0.0 {
        for i in 0..n {
            let e: f64 = StandardNormal.sample(rng);
            y[i] += noise * e;
        }
    }
    RegDataset::new(x, y, k, RegConfig::alpha_x(d)).unwrap()
}

#[test]
fn ols_exact_on_noiseless_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 3;
    let f_star = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let data = make_data(&mut rng, 60, d, &f_star, 0.0, 4);
    let fit = ols_init(&data);
    assert!((&fit - &f_star).amax() < 1e-10, "{fit}");
}

#[test]
fn ols_hand_computed_slope() {
    // d=1, X=(1,2), Y=(2,4) -> slope 2.
    let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
    let y = DVector::from_vec(vec![2.0, 4.0]);
    let data = RegDataset::new(x, y, 1, f64::INFINITY).unwrap();
    let fit = ols_init(&data);
    assert!((fit[0] - 2.0).abs() < 1e-12);
}

#[test]
fn ols_zero_design_gives_zero() {
    let x = DMatrix::zeros(5, 3);
    let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let data = RegDataset::new(x, y, 1, f64::INFINITY).unwrap();
    let fit = ols_init(&data);
    assert!(fit.amax() == 0.0);
}

#[test]
fn truncation_zeroes_whole_pairs() {
    let x = DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.1, 0.1]);
    let y = DVector::from_vec(vec![5.0, 1.0]);
    let data = RegDataset::new(x, y, 1, 1.0).unwrap();
    // First pair zeroed entirely: bucket statistics see only the second row.
    let s = data.bucket_second_moment(0);
    assert!((s[(0, 0)] - 0.005).abs() < 1e-12);
}

/// Noiseless data at g = f*: all bucket correlations are exactly zero, so
/// the noise program value is 0 and certify_done holds.
#[test]
fn noise_program_zero_at_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 3;
    let n = 300;
    let f_star = DVector::from_vec(vec![0.3, -0.7, 1.1]);
    let cfg = RegConfig::from_problem(n, d, 1e-3);
    let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);
    let (value, pe) = noise_sdp_value(&data, &f_star, 0.1, &cfg).unwrap();
    assert!(value.abs() < 1e-4, "value {value}");
    assert!(value >= -1e-6 && value <= data.k as f64 + 1e-6);
    assert!(pe.diagnostics(true).max_idempotence_residual <= 1e-6);
    assert!(certify_done(&data, &f_star, &cfg));
}

/// A bucket-aligned residual direction with margin 2r drives the program to
/// its cap k (explicit integral feasible assignment).
#[test]
fn noise_program_caps_at_k() {
    let d = 2;
    let k = 3;
    let m = 20;
    let n = k * m;
    // Design with identity second moment per bucket: alternate +-e1, +-e2.
    let mut x = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let coord = (i / 2) % d;
        x[(i, coord)] = sign * (d as f64).sqrt();
    }
    // Y - g has constant direction w per bucket: take g = 0 and Y = <w, x>.
    let w = DVector::from_vec(vec![0.6, 0.8]);
    let y = &x * &w;
    let data = RegDataset::new(x, y, k, f64::INFINITY).unwrap();
    let mut cfg = RegConfig::from_problem(n, d, 1e-2);
    cfg.k = k;
    // <Y - 0, f>_i = w^T S_i f = <w, f> with S_i = I; at f = w/||w|| the
    // correlation is ||w|| = 1, so r = 0.5 is attainable with margin 2.
    let (value, _) = noise_sdp_value(&data, &DVector::zeros(d), 0.5, &cfg).unwrap();
    assert!((value - k as f64).abs() < 1e-4, "value {value}");
}

/// Identity-bucket data: both norm programs stay near zero at their default
/// constants (the constraint contradicts the bucket norm except on
/// negligible mass).
#[test]
fn norm_programs_small_on_identity_buckets() {
    let d = 2;
    let k = 3;
    let m = 8;
    let n = k * m;
    let mut x = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let coord = (i / 2) % d;
        x[(i, coord)] = sign * (d as f64).sqrt();
    }
    let y = DVector::zeros(n);
    let data = RegDataset::new(x, y, k, f64::INFINITY).unwrap();
    let mut cfg = RegConfig::from_problem(n, d, 1e-2);
    cfg.k = k;
    let (up, _) = norm_sdp_value(&data, NormSide::Upper, cfg.c_up, &cfg).unwrap();
    assert!(up >= -1e-6, "upper {up}");
    assert!(up <= 0.01 * k as f64 + 1e-4, "upper {up}");
    let (low, _) = norm_sdp_value(&data, NormSide::Lower, cfg.c_low, &cfg).unwrap();
    assert!(low >= -1e-6, "lower {low}");
    assert!(low <= 0.01 * k as f64 + 1e-4, "lower {low}");
}

/// Gaussian data with enough samples per bucket: norm program values stay
/// well below k. The 1% norm window needs per-bucket spectral concentration
/// well under 0.01, hence the large bucket size, and the full basis, whose
/// moment matrix certifies pE[b_i f f^T] >= 0.
#[test]
fn norm_programs_small_on_gaussian_buckets() {
    let d = 2;
    let delta = 1e-2;
    let mut ok = 0;
    let trials = 3;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let mut cfg = RegConfig::from_problem(1000, d, delta);
        cfg.k = 5;
        cfg.basis = ht_sos::BasisMode::Full;
        let n = 160_000 * cfg.k; // >= d k 25, sized for 1% concentration
        let f_star = DVector::zeros(d);
        let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);
        let (up, _) = norm_sdp_value(&data, NormSide::Upper, cfg.c_up, &cfg).unwrap();
        let (low, _) = norm_sdp_value(&data, NormSide::Lower, cfg.c_low, &cfg).unwrap();
        if up <= 0.1 * cfg.k as f64 && low <= 0.1 * cfg.k as f64 {
            ok += 1;
        }
    }
    assert!(ok >= trials - 1, "norm programs small in {ok}/{trials} trials");
}

/// certify_done is false when g is far from f* on well-conditioned noiseless
/// data, and monotone in the radius.
#[test]
fn certify_rejects_far_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 3;
    let n = 600;
    let f_star = DVector::from_vec(vec![1.0, 0.0, -1.0]);
    let cfg = RegConfig::from_problem(n, d, 1e-3);
    let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);
    let mut g = f_star.clone();
    g[0] += 50.0 * cfg.c_cert * cfg.r;
    assert!(!certify_done(&data, &g, &cfg));

    // Monotone: true at radius rho stays true at any larger radius.
    let (v1, _) = noise_sdp_value(&data, &g, cfg.c_cert * cfg.r, &cfg).unwrap();
    let (v2, _) = noise_sdp_value(&data, &g, 2.0 * cfg.c_cert * cfg.r, &cfg).unwrap();
    assert!(v2 <= v1 + 1e-6);
}

/// descent_step: certify branch at the truth, contraction from a displaced
/// start, and the returned vector is the first-moment vector.
#[test]
fn descent_step_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 3;
    let n = 900;
    let f_star = DVector::from_vec(vec![0.5, -0.25, 0.75]);
    let cfg = RegConfig::from_problem(n, d, 1e-3);
    let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);

    match descent_step(&data, &f_star, &cfg).unwrap() {
        StepOutcome::Certify => {}
        StepOutcome::Next { .. } => panic!("expected certify at the truth"),
    }

    let mut ok = 0;
    for trial in 0..5 {
        let mut dir = DVector::from_fn(d, |_, _| rng.gen_range(-1.0f64..1.0));
        dir /= dir.norm();
        let g = &f_star + dir * (10.0 * cfg.c_cert * cfg.r);
        match descent_step(&data, &g, &cfg).unwrap() {
            StepOutcome::Certify => panic!("trial {trial}: should not certify far away"),
            StepOutcome::Next { next, .. } => {
                let before = (&g - &f_star).norm();
                let after = (&next - &f_star).norm();
                if after <= cfg.contraction * before {
                    ok += 1;
                }
            }
        }
    }
    assert!(ok >= 4, "contraction in {ok}/5 trials");
}

/// Full pipeline on the zero problem returns exactly zero after OLS.
#[test]
fn zero_problem_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = 3;
    let n = 300;
    let f_star = DVector::zeros(d);
    let cfg = RegConfig::from_problem(n, d, 1e-3);
    let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);
    let fit = estimate_regression(&data, &cfg).unwrap();
    assert_eq!(fit.status, FitStatus::Certified);
    assert!(fit.f_hat.amax() == 0.0, "{}", fit.f_hat);
}

/// Noiseless end-to-end: small error in most seeded trials.
#[test]
fn noiseless_end_to_end() {
    let d = 4;
    let n = 800;
    let mut ok = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut f_star = DVector::from_fn(d, |_, _| rng.gen_range(-1.0f64..1.0));
        f_star /= f_star.norm();
        let cfg = RegConfig::from_problem(n, d, 1e-3);
        let data = make_data(&mut rng, n, d, &f_star, 0.0, cfg.k);
        let fit = estimate_regression(&data, &cfg).unwrap();
        if (&fit.f_hat - &f_star).norm() <= 0.05 {
            ok += 1;
        }
    }
    assert!(ok >= 4, "{ok}/5 noiseless trials within 0.05");
}

/// Unit-variance noise end-to-end: squared error within 10 d / n in most
/// trials.
#[test]
fn noisy_end_to_end() {
    let d = 4;
    let n = 2000;
    let mut ok = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut f_star = DVector::from_fn(d, |_, _| rng.gen_range(-1.0f64..1.0));
        f_star /= f_star.norm();
        let cfg = RegConfig::from_problem(n, d, 1e-3);
        let data = make_data(&mut rng, n, d, &f_star, 1.0, cfg.k);
        let fit = estimate_regression(&data, &cfg).unwrap();
        let err2 = (&fit.f_hat - &f_star).norm_squared();
        if err2 <= 10.0 * d as f64 / n as f64 {
            ok += 1;
        }
    }
    assert!(ok >= 4, "{ok}/5 noisy trials within 10 d/n");
}

/// Bounded differences analogue for the noise program: replacing one bucket
/// of samples changes the value by at most 1.
#[test]
fn noise_value_bounded_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = 2;
    let k = 4;
    let m = 25;
    let n = k * m;
    let f_star = DVector::from_vec(vec![0.4, -0.9]);
    let mut x = gaussian_design(&mut rng, n, d);
    let mut y = &x * &f_star;
    for i in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        y[i] += 0.5 * e;
    }
    let mut cfg = RegConfig::from_problem(n, d, 1e-2);
    cfg.k = k;
    let g = DVector::zeros(d);
    let data = RegDataset::new(x.clone(), y.clone(), k, f64::INFINITY).unwrap();
    let (base, _) = noise_sdp_value(&data, &g, 0.3, &cfg).unwrap();
    // Replace the second bucket with junk.
    for i in m..2 * m {
        for j in 0..d {
            x[(i, j)] = rng.gen_range(-20.0f64..20.0);
        }
        y[i] = rng.gen_range(-20.0f64..20.0);
    }
    let data2 = RegDataset::new(x, y, k, f64::INFINITY).unwrap();
    let (changed, _) = noise_sdp_value(&data2, &g, 0.3, &cfg).unwrap();
    assert!((base - changed).abs() <= 1.0 + 1e-6, "{base} vs {changed}");
}
