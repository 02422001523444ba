use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("k = {k} exceeds n = {n}")]
    TooManyBuckets { k: usize, n: usize },
    #[error("benchmark config invalid: {0}")]
    BadConfig(String),
}

/// Median of the k bucket means, contiguous buckets, lower median for even k.
pub fn median_of_means_1d(samples: &[f64], k: usize) -> Result<f64, BenchError> {
    let n = samples.len();
    if k == 0 || k > n {
        return Err(BenchError::TooManyBuckets { k, n });
    }
    let m = n / k;
    let mut means: Vec<f64> = (0..k)
        .map(|b| samples[b * m..(b + 1) * m].iter().sum::<f64>() / m as f64)
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(means[(k - 1) / 2])
}

/// 1-indexed order statistic ceil((1 - delta) * trials).
pub fn quantile_index(delta: f64, trials: usize) -> usize {
    (((1.0 - delta) * trials as f64).ceil() as usize).clamp(1, trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchTask {
    Mean1d,
    Cov,
    Regress,
    MeanNorm,
}

impl BenchTask {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean1d" => Some(Self::Mean1d),
            "cov" => Some(Self::Cov),
            "regress" => Some(Self::Regress),
            "mean_norm" | "meannorm" => Some(Self::MeanNorm),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean1d => "mean1d",
            Self::Cov => "cov",
            Self::Regress => "regress",
            Self::MeanNorm => "mean_norm",
        }
    }
}

/// One-dimensional generators for the tail benchmark; all are normalized to
/// mean zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchDist {
    Gaussian,
    /// Pareto with the given tail index (> 2 so the variance exists).
    Pareto { index: f64 },
    StudentT { nu: f64 },
    Lognormal,
}

impl BenchDist {
    pub fn parse(s: &str, index: Option<f64>) -> Option<Self> {
        match s {
            "gaussian" => Some(Self::Gaussian),
            "pareto" => Some(Self::Pareto {
                index: index.unwrap_or(2.5),
            }),
            "t" | "student_t" => Some(Self::StudentT {
                nu: index.unwrap_or(9.0),
            }),
            "lognormal" => Some(Self::Lognormal),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Gaussian => "gaussian".into(),
            Self::Pareto { index } => format!("pareto({index})"),
            Self::StudentT { nu } => format!("t({nu})"),
            Self::Lognormal => "lognormal".into(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::Pareto { index } => {
                let a = *index;
                let u: f64 = rng.gen::<f64>();
                let x = (1.0 - u).powf(-1.0 / a);
                let mean = a / (a - 1.0);
                let sd = (a / ((a - 1.0) * (a - 1.0) * (a - 2.0))).sqrt();
                (x - mean) / sd
            }
            Self::StudentT { nu } => {
                let t = rand_distr::StudentT::new(*nu).expect("valid nu");
                let sd = (nu / (nu - 2.0)).sqrt();
                t.sample(rng) / sd
            }
            Self::Lognormal => {
                let ln = rand_distr::LogNormal::new(0.0, 1.0).expect("valid");
                let e = std::f64::consts::E;
                let var = (e - 1.0) * e;
                let a: f64 = ln.sample(rng);
                let b: f64 = ln.sample(rng);
                (a - b) / (2.0 * var).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub task: BenchTask,
    pub dist: BenchDist,
    pub n: usize,
    pub d: usize,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub estimators: Vec<String>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::BadConfig("trials must be >= 1".into()));
        }
        if self.deltas.iter().any(|&d| !(0.0 < d && d < 1.0)) {
            return Err(BenchError::BadConfig("delta values must lie in (0,1)".into()));
        }
        if self.estimators.is_empty() {
            return Err(BenchError::BadConfig("no estimators selected".into()));
        }
        Ok(())
    }

    pub fn default_estimators(task: BenchTask) -> Vec<String> {
        match task {
            BenchTask::Mean1d => vec!["empirical".into(), "mom".into()],
            BenchTask::Cov => vec!["empirical".into(), "sos_mom".into()],
            BenchTask::Regress => vec!["ols".into(), "sos_mom".into()],
            BenchTask::MeanNorm => vec!["empirical".into(), "central_l2".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub task: String,
    pub estimator: String,
    pub delta: f64,
    pub n: usize,
    pub d: usize,
    pub quantile_error: f64,
    pub mean_error: f64,
    pub trials: usize,
    pub runtime_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Per-trial seeds come from the master seed by a simple counter:
/// seed(delta_index, trial) = master + delta_index * trials + trial.
fn trial_seed(cfg: &BenchConfig, delta_idx: usize, trial: usize) -> u64 {
    cfg.master_seed
        .wrapping_add((delta_idx * cfg.trials + trial) as u64)
}

/// Runs the tail benchmark: for each (delta, trial) draw data, run each
/// estimator, record the error; report the empirical (1 - delta)-quantile
/// and mean error per estimator. Trials run in parallel; assembly is an
/// ordered reduction, so reports are deterministic given the config.
pub fn run_tail_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        let started = std::time::Instant::now();
        // errors[trial][estimator]
        let errors: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, delta, trial_seed(cfg, di, t)))
            .collect();
        let runtime_ms = started.elapsed().as_millis();
        for (ei, est) in cfg.estimators.iter().enumerate() {
            let mut errs: Vec<f64> = errors.iter().map(|e| e[ei]).collect();
            let mean_error = errs.iter().sum::<f64>() / errs.len() as f64;
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = errs[quantile_index(delta, cfg.trials) - 1];
            rows.push(BenchRow {
                task: cfg.task.name().into(),
                estimator: est.clone(),
                delta,
                n: cfg.n,
                d: cfg.d,
                quantile_error: q,
                mean_error,
                trials: cfg.trials,
                runtime_ms,
            });
        }
    }
    Ok(BenchReport { rows })
}

fn run_trial(cfg: &BenchConfig, delta: f64, seed: u64) -> Vec<f64> {
    match cfg.task {
        BenchTask::Mean1d => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..cfg.n).map(|_| cfg.dist.draw(&mut rng)).collect();
            let k = ((3.0 * (1.0 / delta).log2()).ceil() as usize).clamp(1, cfg.n);
            cfg.estimators
                .iter()
                .map(|est| match est.as_str() {
                    "empirical" => (samples.iter().sum::<f64>() / cfg.n as f64).abs(),
                    "mom" => median_of_means_1d(&samples, k).map(f64::abs).unwrap_or(f64::NAN),
                    other => {
                        log::warn!("unknown mean1d estimator `{other}`");
                        f64::NAN
                    }
                })
                .collect()
        }
        BenchTask::Cov => {
            let spec = ht_sampler::DistSpec::new(ht_sampler::DistKind::Gaussian, cfg.d)
                .expect("valid dims");
            let data = ht_sampler::sample_dist(&spec, cfg.n, seed).expect("sampling");
            let k = ((3.0 * (1.0 / delta).log2()).ceil() as usize).clamp(1, cfg.n);
            let sigma = spec.sigma();
            cfg.estimators
                .iter()
                .map(|est| match est.as_str() {
                    "empirical" => spec_norm(&(data.second_moment() - &sigma)),
                    "sos_mom" => {
                        let alpha = ht_sampler::compute_truncation_alpha(
                            spec.trace_sigma(),
                            spec.opnorm_sigma(),
                            spec.l_constant(),
                            cfg.n,
                            k,
                        );
                        let cov_cfg = ht_cov::CovConfig {
                            k,
                            alpha,
                            ..ht_cov::CovConfig::default()
                        };
                        match ht_cov::estimate_covariance(&data, &cov_cfg) {
                            Ok(est) => spec_norm(&(est.sigma_hat - &sigma)),
                            Err(e) => {
                                log::warn!("cov estimator failed: {e}");
                                f64::NAN
                            }
                        }
                    }
                    other => {
                        log::warn!("unknown cov estimator `{other}`");
                        f64::NAN
                    }
                })
                .collect()
        }
        BenchTask::Regress => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = cfg.d;
            let mut f_star = DVector::from_fn(d, |_, _| rng.gen_range(-1.0f64..1.0));
            f_star /= f_star.norm();
            let x = nalgebra::DMatrix::from_fn(cfg.n, d, |_, _| StandardNormal.sample(&mut rng));
            let mut y = &x * &f_star;
            for i in 0..cfg.n {
                let e: f64 = StandardNormal.sample(&mut rng);
                y[i] += e;
            }
            let reg_cfg = ht_regress::RegConfig::from_problem(cfg.n, d, delta);
            cfg.estimators
                .iter()
                .map(|est| match est.as_str() {
                    "ols" => {
                        let data = ht_regress::RegDataset::new(
                            x.clone(),
                            y.clone(),
                            reg_cfg.k,
                            f64::INFINITY,
                        )
                        .expect("shapes");
                        (ht_regress::ols_init(&data) - &f_star).norm()
                    }
                    "sos_mom" => {
                        let data = ht_regress::RegDataset::new(
                            x.clone(),
                            y.clone(),
                            reg_cfg.k,
                            ht_regress::RegConfig::alpha_x(d),
                        )
                        .expect("shapes");
                        match ht_regress::estimate_regression(&data, &reg_cfg) {
                            Ok(fit) => (fit.f_hat - &f_star).norm(),
                            Err(e) => {
                                log::warn!("regress estimator failed: {e}");
                                f64::NAN
                            }
                        }
                    }
                    other => {
                        log::warn!("unknown regress estimator `{other}`");
                        f64::NAN
                    }
                })
                .collect()
        }
        BenchTask::MeanNorm => {
            let spec = ht_sampler::DistSpec::new(ht_sampler::DistKind::Gaussian, cfg.d)
                .expect("valid dims");
            let data = ht_sampler::sample_dist(&spec, cfg.n, seed).expect("sampling");
            let oracle = ht_normmean::BuiltinNorm::L2 { d: cfg.d };
            cfg.estimators
                .iter()
                .map(|est| match est.as_str() {
                    "empirical" => data.mean().norm(),
                    "central_l2" => match ht_normmean::estimate_mean_norm(
                        &data,
                        delta,
                        &oracle,
                        &ht_normmean::MeanConfig::default(),
                    ) {
                        Ok(mu) => mu.norm(),
                        Err(e) => {
                            log::warn!("mean estimator failed: {e}");
                            f64::NAN
                        }
                    },
                    other => {
                        log::warn!("unknown mean_norm estimator `{other}`");
                        f64::NAN
                    }
                })
                .collect()
        }
    }
}

fn spec_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// CSV with a versioned schema comment; excludes runtimes so identical
/// configs produce identical bytes (runtimes go to the run summary).
pub fn report_to_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str("# ht bench csv schema v1: task,estimator,delta,n,d,quantile_error,mean_error,trials\n");
    out.push_str("task,estimator,delta,n,d,quantile_error,mean_error,trials\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.17e},{:.17e},{}\n",
            r.task, r.estimator, r.delta, r.n, r.d, r.quantile_error, r.mean_error, r.trials
        ));
    }
    out
}
