use clap::{Parser, Subcommand};
use ht_cli::{report, BenchConfig, BenchDist, BenchTask, FileConfig};
use ht_normmean::SeparationOracle;
use nalgebra::DVector;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "ht",
    version,
    about = "Heavy-tailed estimation toolkit: samplers, bucketed estimators, and benchmarks"
)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (format depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key-value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a built-in distribution.
    Gen {
        /// gaussian | product-t | rademacher | lognormal | point
        #[arg(long)]
        dist: Option<String>,
        /// Degrees of freedom for product-t (must exceed 8).
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated coordinates for the point-mass distribution.
        #[arg(long)]
        point: Option<String>,
    },
    /// Estimate a covariance matrix from a dataset file.
    Cov {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        trsigma: Option<f64>,
        #[arg(long)]
        opnorm: Option<f64>,
        /// Hypercontractivity constant L used in the truncation radius.
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Fit a linear function to an xy dataset (last column = response).
    Regress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Estimate a mean in a chosen norm.
    Mean {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        /// l2 | l1 | linf
        #[arg(long)]
        norm: Option<String>,
    },
    /// Single-spike block mixtures: gen | test | sweep.
    Roadblock {
        /// gen | test | sweep
        action: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated lambda grid for sweep.
        #[arg(long)]
        lambdas: Option<String>,
        /// null | planted
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Tail-probability benchmark comparing estimators.
    Bench {
        /// mean1d | cov | regress | mean_norm
        #[arg(long)]
        task: Option<String>,
        /// gaussian | pareto | t | lognormal
        #[arg(long)]
        dist: Option<String>,
        /// Tail index for pareto (or dof for t).
        #[arg(long)]
        index: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Comma-separated confidence levels.
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated estimator names (task-specific defaults).
        #[arg(long)]
        estimators: Option<String>,
    },
    /// Solve an SDP problem file and write the solution.
    Sdp {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<(), AnyError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or_else(|| cfg.get_u64("seed")).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from));
    let started = Instant::now();

    match cli.command {
        Command::Gen { dist, nu, d, n, point } => {
            let dist = dist.or_else(|| cfg.get("dist").map(String::from)).unwrap_or_else(|| "gaussian".into());
            let d = d.or_else(|| cfg.get_usize("d")).unwrap_or(2);
            let n = n.or_else(|| cfg.get_usize("n")).unwrap_or(1000);
            let nu = nu.or_else(|| cfg.get_f64("nu")).unwrap_or(9.0);
            let point = point.or_else(|| cfg.get("point").map(String::from));
            let kind = match dist.as_str() {
                "gaussian" => ht_sampler::DistKind::Gaussian,
                "product-t" | "t" => ht_sampler::DistKind::ProductT { nu },
                "rademacher" => ht_sampler::DistKind::ProductRademacher,
                "lognormal" => ht_sampler::DistKind::LognormalProduct,
                "point" => {
                    let coords: Vec<f64> = point
                        .ok_or("point-mass needs --point x1,x2,...")?
                        .split(',')
                        .map(|t| t.trim().parse())
                        .collect::<Result<_, _>>()?;
                    ht_sampler::DistKind::PointMass(DVector::from_vec(coords))
                }
                other => return Err(format!("unknown distribution `{other}`").into()),
            };
            let d = if let ht_sampler::DistKind::PointMass(v) = &kind {
                v.len()
            } else {
                d
            };
            let spec = ht_sampler::DistSpec::new(kind, d)?;
            let data = ht_sampler::sample_dist(&spec, n, seed)?;
            let out = out.ok_or("gen needs --out")?;
            ht_sampler::write_dataset(&data, &out)?;
            write_run_summary(
                &out,
                started,
                &[
                    ("command", "gen".into()),
                    ("dist", dist),
                    ("n", n.to_string()),
                    ("d", d.to_string()),
                    ("seed", seed.to_string()),
                ],
            )?;
        }
        Command::Cov {
            input,
            k,
            delta,
            trsigma,
            opnorm,
            l,
            eps,
        } => {
            let delta = delta.or_else(|| cfg.get_f64("delta")).unwrap_or(1e-3);
            let k = k
                .or_else(|| cfg.get_usize("k"))
                .unwrap_or_else(|| ht_cov::CovConfig::k_from_delta(delta));
            let eps = eps.or_else(|| cfg.get_f64("eps")).unwrap_or(1e-3);
            let trsigma = trsigma.or_else(|| cfg.get_f64("trsigma"));
            let opnorm = opnorm.or_else(|| cfg.get_f64("opnorm"));
            let l = l.or_else(|| cfg.get_f64("l"));
            let data = ht_sampler::read_dataset(&input)?;

            // Sigma parameters are config inputs; without them, estimate
            // from a 20% sample split and estimate on the remainder.
            let (data, trsigma, opnorm, l) = match (trsigma, opnorm, l) {
                (Some(t), Some(o), lopt) => (data, t, o, lopt.unwrap_or(105.0f64.sqrt())),
                _ => {
                    let n = data.n();
                    let split = (n / 5).max(1);
                    let head = ht_sampler::Dataset::from_matrix(
                        data.samples.rows(0, split).into_owned(),
                    );
                    let rest = ht_sampler::Dataset::from_matrix(
                        data.samples.rows(split, n - split).into_owned(),
                    );
                    let sm = head.second_moment();
                    let eig = nalgebra::SymmetricEigen::new(sm.clone());
                    let op = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
                    (rest, sm.trace(), op, l.unwrap_or(105.0f64.sqrt()))
                }
            };
            let n = data.n();
            let alpha = ht_sampler::compute_truncation_alpha(trsigma, opnorm, l, n, k);
            let cov_cfg = ht_cov::CovConfig {
                k,
                alpha,
                epsilon: eps,
                ..ht_cov::CovConfig::default()
            };
            let est = ht_cov::estimate_covariance(&data, &cov_cfg)?;
            #[derive(Serialize)]
            struct CovOut {
                sigma_hat: Vec<Vec<f64>>,
                d_star: f64,
                iterations: usize,
                trace: Vec<(usize, f64)>,
                stopped_early: bool,
                k: usize,
                alpha: f64,
            }
            let out = out.ok_or("cov needs --out")?;
            let payload = CovOut {
                sigma_hat: report::matrix_rows(&est.sigma_hat),
                d_star: est.d_star,
                iterations: est.iterations,
                trace: est.trace.clone(),
                stopped_early: est.stopped_early,
                k,
                alpha,
            };
            std::fs::write(&out, serde_json::to_string_pretty(&payload)?)?;
            write_run_summary(
                &out,
                started,
                &[
                    ("command", "cov".into()),
                    ("k", k.to_string()),
                    ("alpha", format!("{alpha:.6e}")),
                    ("d_star", format!("{:.6e}", est.d_star)),
                    ("iterations", est.iterations.to_string()),
                ],
            )?;
        }
        Command::Regress { input, delta } => {
            let delta = delta.or_else(|| cfg.get_f64("delta")).unwrap_or(1e-3);
            let xy = ht_sampler::read_dataset(&input)?;
            if xy.d() < 2 {
                return Err("xy file needs at least two columns (features + response)".into());
            }
            let d = xy.d() - 1;
            let n = xy.n();
            let x = xy.samples.columns(0, d).into_owned();
            let y = DVector::from_iterator(n, (0..n).map(|i| xy.samples[(i, d)]));
            let reg_cfg = ht_regress::RegConfig::from_problem(n, d, delta);
            let data =
                ht_regress::RegDataset::new(x, y, reg_cfg.k, ht_regress::RegConfig::alpha_x(d))?;
            let fit = ht_regress::estimate_regression(&data, &reg_cfg)?;
            #[derive(Serialize)]
            struct FitOut {
                f_hat: Vec<f64>,
                steps: usize,
                status: String,
                k: usize,
                r: f64,
            }
            let out = out.ok_or("regress needs --out")?;
            let payload = FitOut {
                f_hat: report::vector_entries(&fit.f_hat),
                steps: fit.steps,
                status: format!("{:?}", fit.status),
                k: reg_cfg.k,
                r: reg_cfg.r,
            };
            std::fs::write(&out, serde_json::to_string_pretty(&payload)?)?;
            write_run_summary(
                &out,
                started,
                &[
                    ("command", "regress".into()),
                    ("steps", fit.steps.to_string()),
                    ("status", format!("{:?}", fit.status)),
                ],
            )?;
        }
        Command::Mean { input, delta, norm } => {
            let delta = delta.or_else(|| cfg.get_f64("delta")).unwrap_or(1e-2);
            let norm = norm.or_else(|| cfg.get("norm").map(String::from)).unwrap_or_else(|| "l2".into());
            let data = ht_sampler::read_dataset(&input)?;
            let d = data.d();
            let oracle: Box<dyn SeparationOracle> = match norm.as_str() {
                "l2" => Box::new(ht_normmean::BuiltinNorm::L2 { d }),
                "l1" => Box::new(ht_normmean::BuiltinNorm::L1 { d }),
                "linf" => Box::new(ht_normmean::BuiltinNorm::Linf { d }),
                other => return Err(format!("unknown norm `{other}`").into()),
            };
            let mu = ht_normmean::estimate_mean_norm(
                &data,
                delta,
                oracle.as_ref(),
                &ht_normmean::MeanConfig::default(),
            )?;
            #[derive(Serialize)]
            struct MeanOut {
                mu: Vec<f64>,
                norm: String,
                delta: f64,
            }
            let out = out.ok_or("mean needs --out")?;
            let payload = MeanOut {
                mu: report::vector_entries(&mu),
                norm: norm.clone(),
                delta,
            };
            std::fs::write(&out, serde_json::to_string_pretty(&payload)?)?;
            write_run_summary(
                &out,
                started,
                &[("command", "mean".into()), ("norm", norm)],
            )?;
        }
        Command::Roadblock {
            action,
            d,
            m,
            lambda,
            lambdas,
            case,
            trials,
        } => {
            let d = d.or_else(|| cfg.get_usize("d")).unwrap_or(6);
            let m = m.or_else(|| cfg.get_usize("m")).unwrap_or(400);
            let lambda = lambda.or_else(|| cfg.get_f64("lambda")).unwrap_or(0.6);
            let trials = trials.or_else(|| cfg.get_usize("trials")).unwrap_or(10);
            let case = case.or_else(|| cfg.get("case").map(String::from)).unwrap_or_else(|| "planted".into());
            let label = match case.as_str() {
                "null" => ht_roadblock::Label::Null,
                "planted" => ht_roadblock::Label::Planted,
                other => return Err(format!("unknown case `{other}`").into()),
            };
            match action.as_str() {
                "gen" => {
                    let inst = ht_roadblock::gen_block_mixture(d, m, lambda, label, seed)?;
                    let out = out.ok_or("roadblock gen needs --out")?;
                    let data = ht_sampler::Dataset::from_matrix(inst.y.clone());
                    ht_sampler::write_dataset(&data, &out)?;
                    write_run_summary(
                        &out,
                        started,
                        &[
                            ("command", "roadblock gen".into()),
                            ("case", case),
                            ("lambda", lambda.to_string()),
                            ("d", d.to_string()),
                            ("m", m.to_string()),
                            ("seed", seed.to_string()),
                        ],
                    )?;
                }
                "test" => {
                    let inst = ht_roadblock::gen_block_mixture(d, m, lambda, label, seed)?;
                    let subset = ht_roadblock::subset_spectral_test(&inst, lambda)?;
                    let sos = ht_roadblock::sos_spike_test(&inst, lambda)?;
                    println!("case={case} subset={subset:?} sos={sos:?}");
                    if let Some(out) = out {
                        let text = format!(
                            "# ht roadblock test v1: case,subset,sos\n{case},{subset:?},{sos:?}\n"
                        );
                        std::fs::write(&out, text)?;
                        write_run_summary(&out, started, &[("command", "roadblock test".into())])?;
                    }
                }
                "sweep" => {
                    let grid: Vec<f64> = match lambdas {
                        Some(s) => s
                            .split(',')
                            .map(|t| t.trim().parse())
                            .collect::<Result<_, _>>()?,
                        None => vec![lambda],
                    };
                    let mut csv = String::from(
                        "# ht roadblock sweep csv v1: lambda,test,accuracy,trials\nlambda,test,accuracy,trials\n",
                    );
                    for &lam in &grid {
                        let mut subset_correct = 0usize;
                        let mut sos_correct = 0usize;
                        for t in 0..trials {
                            for (case_label, offset) in
                                [(ht_roadblock::Label::Planted, 0u64), (ht_roadblock::Label::Null, 1_000_000)]
                            {
                                let inst = ht_roadblock::gen_block_mixture(
                                    d,
                                    m,
                                    lam,
                                    case_label,
                                    seed + offset + t as u64,
                                )?;
                                if ht_roadblock::subset_spectral_test(&inst, lam)? == case_label {
                                    subset_correct += 1;
                                }
                                if ht_roadblock::sos_spike_test(&inst, lam)? == case_label {
                                    sos_correct += 1;
                                }
                            }
                        }
                        let denom = (2 * trials) as f64;
                        csv.push_str(&format!(
                            "{lam},subset,{:.6},{trials}\n",
                            subset_correct as f64 / denom
                        ));
                        csv.push_str(&format!(
                            "{lam},sos,{:.6},{trials}\n",
                            sos_correct as f64 / denom
                        ));
                    }
                    let out = out.ok_or("roadblock sweep needs --out")?;
                    std::fs::write(&out, csv)?;
                    write_run_summary(&out, started, &[("command", "roadblock sweep".into())])?;
                }
                other => return Err(format!("unknown roadblock action `{other}`").into()),
            }
        }
        Command::Bench {
            task,
            dist,
            index,
            n,
            d,
            deltas,
            trials,
            estimators,
        } => {
            let task = task.or_else(|| cfg.get("task").map(String::from)).unwrap_or_else(|| "mean1d".into());
            let task = BenchTask::parse(&task).ok_or_else(|| format!("unknown task `{task}`"))?;
            let dist = dist.or_else(|| cfg.get("dist").map(String::from)).unwrap_or_else(|| "pareto".into());
            let index = index.or_else(|| cfg.get_f64("index"));
            let dist = BenchDist::parse(&dist, index).ok_or_else(|| format!("unknown dist `{dist}`"))?;
            let n = n.or_else(|| cfg.get_usize("n")).unwrap_or(4000);
            let d = d.or_else(|| cfg.get_usize("d")).unwrap_or(2);
            let trials = trials.or_else(|| cfg.get_usize("trials")).unwrap_or(200);
            let deltas: Vec<f64> = match deltas.or_else(|| cfg.get("deltas").map(String::from)) {
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse())
                    .collect::<Result<_, _>>()?,
                None => vec![0.01],
            };
            let estimators: Vec<String> = match estimators.or_else(|| cfg.get("estimators").map(String::from)) {
                Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
                None => BenchConfig::default_estimators(task),
            };
            let bench_cfg = BenchConfig {
                task,
                dist,
                n,
                d,
                deltas,
                trials,
                master_seed: seed,
                estimators,
            };
            let reportv = ht_cli::run_tail_benchmark(&bench_cfg)?;
            let out = out.ok_or("bench needs --out")?;
            std::fs::write(&out, ht_cli::report_to_csv(&reportv))?;
            let runtime_total: u128 = reportv.rows.iter().map(|r| r.runtime_ms).sum();
            write_run_summary(
                &out,
                started,
                &[
                    ("command", "bench".into()),
                    ("task", bench_cfg.task.name().into()),
                    ("dist", bench_cfg.dist.name()),
                    ("rows", reportv.rows.len().to_string()),
                    ("trial_runtime_ms", runtime_total.to_string()),
                ],
            )?;
        }
        Command::Sdp { input } => {
            let problem = ht_sdp::read_problem(&input)?;
            let sol = ht_sdp::solve_sdp(&problem, &ht_sdp::SolveOptions::default())?;
            println!(
                "status {:?} objective {:.12e} gap {:.3e} iterations {}",
                sol.status, sol.objective, sol.gap, sol.iterations
            );
            if let Some(out) = out {
                ht_sdp::write_solution(&sol, &out)?;
                write_run_summary(
                    &out,
                    started,
                    &[
                        ("command", "sdp".into()),
                        ("status", format!("{:?}", sol.status)),
                        ("objective", format!("{:.12e}", sol.objective)),
                    ],
                )?;
            }
        }
    }
    Ok(())
}

fn write_run_summary(
    out: &Path,
    started: Instant,
    entries: &[(&str, String)],
) -> std::io::Result<()> {
    let mut all: Vec<(&str, String)> = entries.to_vec();
    all.push(("runtime_ms", started.elapsed().as_millis().to_string()));
    report::write_summary(&report::summary_path(out), &all)
}
