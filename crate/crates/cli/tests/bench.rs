use ht_cli::{
    median_of_means_1d, quantile_index, report_to_csv, run_tail_benchmark, BenchConfig, BenchDist,
    BenchTask, FileConfig,
};

#[test]
fn mom_hand_cases() {
    // Constant samples.
    let c = vec![3.25; 10];
    assert_eq!(median_of_means_1d(&c, 5).unwrap(), 3.25);

    // Samples 1..8 in k=4 buckets: means (1.5, 3.5, 5.5, 7.5); lower median
    // = 3.5.
    let s: Vec<f64> = (1..=8).map(|v| v as f64).collect();
    assert_eq!(median_of_means_1d(&s, 4).unwrap(), 3.5);

    // One sample replaced by 1e6: recompute through the same bucket-mean
    // oracle; the median moves by at most the gap between adjacent bucket
    // means.
    let mut t = s.clone();
    t[7] = 1e6;
    let before = median_of_means_1d(&s, 4).unwrap();
    let after = median_of_means_1d(&t, 4).unwrap();
    let mut means: Vec<f64> = (0..4).map(|b| (s[2 * b] + s[2 * b + 1]) / 2.0).collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_gap = means.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    assert!((after - before).abs() <= max_gap + 1e-12, "moved {}", after - before);

    // Errors.
    assert!(median_of_means_1d(&s, 9).is_err());
    assert!(median_of_means_1d(&s, 0).is_err());
}

/// The quantile picks the order statistic ceil((1-delta) * trials), checked
/// against a direct sorting oracle.
#[test]
fn quantile_is_exact_order_statistic() {
    assert_eq!(quantile_index(0.002, 2000), 1996);
    assert_eq!(quantile_index(0.5, 10), 5);
    assert_eq!(quantile_index(1e-9, 3), 3);

    let cfg = BenchConfig {
        task: BenchTask::Mean1d,
        dist: BenchDist::Gaussian,
        n: 50,
        d: 1,
        deltas: vec![0.1],
        trials: 40,
        master_seed: 9,
        estimators: vec!["empirical".into()],
    };
    let report = run_tail_benchmark(&cfg).unwrap();
    // Recompute the errors with the same per-trial seeds and sort.
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut errs: Vec<f64> = (0..40u64)
        .map(|t| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9 + t);
            let s: Vec<f64> = (0..50)
                .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                .collect();
            (s.iter().sum::<f64>() / 50.0).abs()
        })
        .collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expect = errs[quantile_index(0.1, 40) - 1];
    assert!((report.rows[0].quantile_error - expect).abs() < 1e-15);
}

/// Identical configs produce identical CSV bytes; trial counts and row
/// bookkeeping match the config.
#[test]
fn report_reproducible_and_shaped() {
    let cfg = BenchConfig {
        task: BenchTask::Mean1d,
        dist: BenchDist::Pareto { index: 2.5 },
        n: 200,
        d: 1,
        deltas: vec![0.1, 0.02],
        trials: 30,
        master_seed: 4,
        estimators: vec!["empirical".into(), "mom".into()],
    };
    let a = report_to_csv(&run_tail_benchmark(&cfg).unwrap());
    let b = report_to_csv(&run_tail_benchmark(&cfg).unwrap());
    assert_eq!(a.as_bytes(), b.as_bytes());
    // |deltas| x |estimators| rows.
    let report = run_tail_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.quantile_error >= 0.0));
    assert!(report.rows.iter().all(|r| r.trials == 30));

    // trials = 1 still produces one error sample per estimator per delta.
    let tiny = BenchConfig {
        trials: 1,
        ..cfg
    };
    let report = run_tail_benchmark(&tiny).unwrap();
    assert_eq!(report.rows.len(), 4);
}

/// Gaussian data at constant confidence: both estimators are within 2x of
/// each other.
#[test]
fn gaussian_estimators_comparable() {
    let cfg = BenchConfig {
        task: BenchTask::Mean1d,
        dist: BenchDist::Gaussian,
        n: 2000,
        d: 1,
        deltas: vec![0.5],
        trials: 400,
        master_seed: 3,
        estimators: vec!["empirical".into(), "mom".into()],
    };
    let report = run_tail_benchmark(&cfg).unwrap();
    let emp = report.rows[0].quantile_error;
    let mom = report.rows[1].quantile_error;
    assert!(emp <= 2.0 * mom && mom <= 2.0 * emp, "emp {emp} mom {mom}");
}

/// Heavy-tail separation at the operation-example parameters: the bucketed
/// estimator's tail quantile beats the empirical mean at Pareto(2.5).
#[test]
fn pareto_mom_beats_mean() {
    let cfg = BenchConfig {
        task: BenchTask::Mean1d,
        dist: BenchDist::Pareto { index: 2.5 },
        n: 4000,
        d: 1,
        deltas: vec![0.002],
        trials: 2000,
        master_seed: 0,
        estimators: vec!["empirical".into(), "mom".into()],
    };
    let report = run_tail_benchmark(&cfg).unwrap();
    let emp = report.rows[0].quantile_error;
    let mom = report.rows[1].quantile_error;
    assert!(mom < emp, "mom {mom} vs empirical {emp}");
}

#[test]
fn config_file_round_trip() {
    let cfg = FileConfig::parse("seed 7\ntask mean1d\ndeltas 0.1,0.2\nk=12\n");
    assert_eq!(cfg.get_u64("seed"), Some(7));
    assert_eq!(cfg.get("task"), Some("mean1d"));
    assert_eq!(cfg.get("deltas"), Some("0.1,0.2"));
    assert_eq!(cfg.get_usize("k"), Some(12));
}
