//! Covariance estimation from bucketed second moments.
//!
//! The estimator never sees the samples directly: it works from the k
//! per-bucket second-moment matrices Z_i. Two signed certification programs
//! decide whether a candidate matrix x deviates from most buckets by at
//! least r in some direction; a geometric binary search over r turns that
//! test into a distance estimate, the moment matrix of the winning program
//! supplies a descent direction, and the outer loop walks the candidate
//! toward the bucket consensus.

use ht_sampler::{make_buckets, BucketSummary, Dataset};
use ht_sos::{
    compile_program, BasisMode, Monomial, MonomialBasis, Polynomial, Program, PseudoExpectation, SolveOptions, SosError,
};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CovError {
    #[error("bucket/candidate dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no gradient available: neither sign program reached the accept threshold")]
    NoGradient,
    #[error("sos error: {0}")]
    Sos(#[from] SosError),
    #[error("sampler error: {0}")]
    Sampler(#[from] ht_sampler::SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Pos,
    Neg,
}

#[derive(Debug, Clone)]
pub struct CovConfig {
    pub k: usize,
    /// Truncation radius applied when bucketing raw samples.
    pub alpha: f64,
    /// Descent terminates once the estimated distance falls below this.
    pub epsilon: f64,
    /// Iteration budget; `None` derives 16 d ln(max(1, d0/eps)).
    pub nit: Option<usize>,
    /// Distance search grid: smallest radius, optional largest radius
    /// (defaults to max_i ||Z_i - x||), and relative resolution.
    pub r_min: f64,
    pub r_max: Option<f64>,
    pub rel_step: f64,
    /// Fraction of k that counts as "reached" (ties included).
    pub accept: f64,
    /// Certification threshold fraction (value below this certifies).
    pub certify: f64,
    pub step_divisor: f64,
    pub basis: BasisMode,
    pub sdp: SolveOptions,
}

impl Default for CovConfig {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: f64::INFINITY,
            epsilon: 1e-3,
            nit: None,
            r_min: 1e-4,
            r_max: None,
            rel_step: 0.01,
            accept: 0.999,
            certify: 0.001,
            step_divisor: 4.0,
            basis: BasisMode::Partial,
            sdp: SolveOptions {
                gap_tol: 1e-7,
                ..SolveOptions::default()
            },
        }
    }
}

impl CovConfig {
    /// k = ceil(3 log2(1/delta)).
    pub fn k_from_delta(delta: f64) -> usize {
        (3.0 * (1.0 / delta).log2()).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct CertResult {
    /// Optimal pE[sum_i b_i], in [0, k].
    pub value: f64,
    pub pe: PseudoExpectation,
    pub sign: Sign,
    pub r: f64,
}

/// Optimal value of the signed certification program at radius r:
/// maximize pE[sum b_i] subject to b_i^2 = b_i, ||u||^2 = 1 and
/// pE[s b_i <Z_i - x, uu^T>] >= r pE[b_i] with s the sign.
pub fn test_cov_value(
    buckets: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    r: f64,
    sign: Sign,
    cfg: &CovConfig,
) -> Result<CertResult, CovError> {
    let k = buckets.len();
    let d = x.nrows();
    for z in buckets {
        if z.nrows() != d || z.ncols() != d {
            return Err(CovError::DimensionMismatch(z.nrows(), d));
        }
    }
    let basis = MonomialBasis::build(d, k, cfg.basis);
    let mut objective = Polynomial::zero();
    let mut equalities = vec![Polynomial::sphere(d)];
    let mut inequalities = Vec::with_capacity(k);
    let s = match sign {
        Sign::Pos => 1.0,
        Sign::Neg => -1.0,
    };
    for (i, z) in buckets.iter().enumerate() {
        let b = d + i;
        objective.add_term(Monomial::var(b), 1.0);
        equalities.push(Polynomial::idempotence(b));
        // h_i = s * b_i <Z_i - x, uu^T> - r b_i
        let dev = z - x;
        let quad = Polynomial::quadratic_form(&dev, 0);
        let mut h = quad.scale(s).mul_monomial(&Monomial::var(b));
        h.add_term(Monomial::var(b), -r);
        inequalities.push(h);
    }
    let compiled = compile_program(
        &Program {
            objective,
            equalities,
            inequalities,
        },
        &basis,
    )?;
    let solved = compiled.solve(&cfg.sdp)?;
    Ok(CertResult {
        value: solved.value,
        pe: solved.pe,
        sign,
        r,
    })
}

/// Value of max(pos, neg) at radius r, treating failed solves as "below
/// threshold". Short-circuits the negative program when the positive one
/// already reaches the threshold.
fn probe(
    buckets: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    r: f64,
    cfg: &CovConfig,
    threshold: f64,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for sign in [Sign::Pos, Sign::Neg] {
        match test_cov_value(buckets, x, r, sign, cfg) {
            Ok(res) if usable(&res.pe) => {
                best = best.max(res.value);
                if best >= threshold {
                    return best;
                }
            }
            Ok(res) => {
                log::warn!(
                    "test-cov probe at r={r} ({sign:?}) returned status {:?}; treated as below threshold",
                    res.pe.status
                );
            }
            Err(e) => {
                log::warn!("test-cov probe at r={r} ({sign:?}) failed: {e}; treated as below threshold");
            }
        }
    }
    best
}

fn usable(pe: &PseudoExpectation) -> bool {
    pe.converged(1e-5)
}

/// Largest radius in the geometric grid at which one of the signed programs
/// still reaches accept*k; r_min when none does.
pub fn dist_est(buckets: &[DMatrix<f64>], x: &DMatrix<f64>, cfg: &CovConfig) -> f64 {
    dist_est_hinted(buckets, x, cfg, None)
}

/// As dist_est, but optionally seeded with a previous estimate, which lets
/// the search bracket the feasibility boundary in a few probes.
pub fn dist_est_hinted(
    buckets: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    cfg: &CovConfig,
    hint: Option<f64>,
) -> f64 {
    let k = buckets.len() as f64;
    let threshold = cfg.accept * k;
    let r_max = cfg.r_max.unwrap_or_else(|| {
        buckets
            .iter()
            .map(|z| {
                let diff = z - x;
                let eig = nalgebra::SymmetricEigen::new(diff);
                eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
            })
            .fold(0.0f64, f64::max)
    });
    if r_max <= cfg.r_min {
        return cfg.r_min;
    }

    // Establish a bracket [lo feasible, hi infeasible] on the boundary.
    let mut lo;
    let mut hi;
    match hint {
        Some(h) if h > cfg.r_min && h < r_max => {
            const RATIO: f64 = 1.5;
            if probe(buckets, x, h, cfg, threshold) >= threshold {
                lo = h;
                hi = (h * RATIO).min(r_max);
                while probe(buckets, x, hi, cfg, threshold) >= threshold {
                    lo = hi;
                    if hi >= r_max {
                        return r_max;
                    }
                    hi = (hi * RATIO).min(r_max);
                }
            } else {
                hi = h;
                lo = (h / RATIO).max(cfg.r_min);
                while probe(buckets, x, lo, cfg, threshold) < threshold {
                    hi = lo;
                    if lo <= cfg.r_min {
                        return cfg.r_min;
                    }
                    lo = (lo / RATIO).max(cfg.r_min);
                }
            }
        }
        _ => {
            if probe(buckets, x, cfg.r_min, cfg, threshold) < threshold {
                return cfg.r_min;
            }
            if probe(buckets, x, r_max, cfg, threshold) >= threshold {
                return r_max;
            }
            lo = cfg.r_min;
            hi = r_max;
        }
    }

    while hi / lo > 1.0 + cfg.rel_step {
        let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        if probe(buckets, x, mid, cfg, threshold) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Gradient from the winning sign program at a given radius, without
/// re-running the distance search.
fn grad_at_radius(
    buckets: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    r: f64,
    cfg: &CovConfig,
) -> Result<DMatrix<f64>, CovError> {
    let k = buckets.len() as f64;
    let threshold = cfg.accept * k;
    let pos = test_cov_value(buckets, x, r, Sign::Pos, cfg)?;
    if usable(&pos.pe) && pos.value >= threshold {
        return Ok(pos.pe.extract_uu());
    }
    let neg = test_cov_value(buckets, x, r, Sign::Neg, cfg)?;
    if usable(&neg.pe) && neg.value >= threshold {
        return Ok(-neg.pe.extract_uu());
    }
    Err(CovError::NoGradient)
}

/// Gradient G = pE[uu^T] of the winning sign program at the estimated
/// distance, negated when the negative program wins. Nuclear norm 1 up to
/// solver tolerance.
pub fn grad_est(
    buckets: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    cfg: &CovConfig,
) -> Result<(DMatrix<f64>, f64), CovError> {
    let d_star = dist_est(buckets, x, cfg);
    let g = grad_at_radius(buckets, x, d_star, cfg)?;
    Ok((g, d_star))
}

#[derive(Debug, Clone)]
pub struct CovEstimate {
    pub sigma_hat: DMatrix<f64>,
    pub d_star: f64,
    pub iterations: usize,
    /// (iteration, estimated distance) pairs.
    pub trace: Vec<(usize, f64)>,
    /// The iterate at each recorded step, for contraction diagnostics.
    pub iterates: Vec<DMatrix<f64>>,
    pub stopped_early: bool,
}

/// Gradient descent from Sigma_0 = 0 over the bucketed second moments,
/// tracking the iterate with the smallest estimated distance.
pub fn estimate_covariance(data: &Dataset, cfg: &CovConfig) -> Result<CovEstimate, CovError> {
    let summary: BucketSummary = make_buckets(data, cfg.k, cfg.alpha)?;
    estimate_covariance_from_buckets(&summary.z, cfg)
}

pub fn estimate_covariance_from_buckets(
    buckets: &[DMatrix<f64>],
    cfg: &CovConfig,
) -> Result<CovEstimate, CovError> {
    let d = buckets[0].nrows();
    let mut x = DMatrix::<f64>::zeros(d, d);
    let mut best_x = x.clone();
    let mut best_d = f64::INFINITY;
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    let mut stopped_early = false;
    let mut stall = 0usize;

    let d0 = dist_est(buckets, &x, cfg);
    let nit = cfg.nit.unwrap_or_else(|| {
        let f0 = d0.max(cfg.epsilon);
        ((16.0 * d as f64) * (f0 / cfg.epsilon).max(1.0).ln()).ceil() as usize
    });

    let mut t = 0usize;
    let mut prev_d: Option<f64> = None;
    loop {
        if t > nit {
            break;
        }
        let d_t = if t == 0 {
            d0
        } else {
            dist_est_hinted(buckets, &x, cfg, prev_d)
        };
        prev_d = Some(d_t);
        trace.push((t, d_t));
        iterates.push(x.clone());
        if d_t < best_d {
            best_d = d_t;
            best_x = x.clone();
            stall = 0;
        } else {
            stall += 1;
        }
        if d_t <= cfg.epsilon {
            stopped_early = true;
            break;
        }
        // Iterates orbit the optimum once the statistical floor is reached.
        if stall >= 8 {
            stopped_early = true;
            break;
        }
        if t == nit {
            break;
        }
        let g = match grad_at_radius(buckets, &x, d_t, cfg) {
            Ok(v) => v,
            Err(CovError::NoGradient) => {
                stopped_early = true;
                break;
            }
            Err(e) => return Err(e),
        };
        x += g * (d_t / cfg.step_divisor);
        t += 1;
    }

    Ok(CovEstimate {
        sigma_hat: best_x,
        d_star: best_d,
        iterations: t,
        trace,
        iterates,
        stopped_early,
    })
}
