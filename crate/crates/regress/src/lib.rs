//! Linear regression with exponentially good confidence under finite-moment
//! assumptions.
//!
//! The pipeline starts from ordinary least squares, then repeatedly either
//! certifies that the current coefficient vector is close to the truth (a
//! bucketed correlation program stays small) or takes a descent step whose
//! length comes from a binary search on a feasibility program over
//! pseudoexpectations.

use ht_sos::{
    compile_feasibility, compile_program, BasisMode, Monomial, MonomialBasis, Polynomial, Program,
    PseudoExpectation, SolveOptions, SosError,
};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("x has {0} rows but y has {1}")]
    ShapeMismatch(usize, usize),
    #[error("k = {k} exceeds n = {n}")]
    TooManyBuckets { k: usize, n: usize },
    #[error("descent stalled: no feasible step length in [{lo}, {hi}] over {probes} probes")]
    Stalled { lo: f64, hi: f64, probes: usize },
    #[error("sos error: {0}")]
    Sos(#[from] SosError),
}

/// Regression samples with whole-pair truncation and per-bucket sufficient
/// statistics. Pairs with ||X_i|| > alpha_x are zeroed (both sides).
#[derive(Debug, Clone)]
pub struct RegDataset {
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub alpha_x: f64,
    /// Truncated design and responses (for OLS).
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// Per-bucket second moments (1/m) sum X X^T.
    s_hat: Vec<DMatrix<f64>>,
    /// Per-bucket response correlations (1/m) sum Y_j X_j.
    xy: Vec<DVector<f64>>,
    /// Per-bucket mean squared responses.
    y2: Vec<f64>,
}

impl RegDataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        k: usize,
        alpha_x: f64,
    ) -> Result<Self, RegressError> {
        let n = x.nrows();
        if y.len() != n {
            return Err(RegressError::ShapeMismatch(n, y.len()));
        }
        if k == 0 || k > n {
            return Err(RegressError::TooManyBuckets { k, n });
        }
        let d = x.ncols();
        let mut xt = x;
        let mut yt = y;
        for r in 0..n {
            if xt.row(r).norm() > alpha_x {
                xt.row_mut(r).fill(0.0);
                yt[r] = 0.0;
            }
        }
        let m = n / k;
        let mut s_hat = Vec::with_capacity(k);
        let mut xy = Vec::with_capacity(k);
        let mut y2 = Vec::with_capacity(k);
        for b in 0..k {
            let mut s = DMatrix::<f64>::zeros(d, d);
            let mut v = DVector::<f64>::zeros(d);
            let mut q = 0.0;
            for j in b * m..(b + 1) * m {
                let row = xt.row(j);
                for p in 0..d {
                    v[p] += yt[j] * row[p];
                    for r2 in p..d {
                        s[(p, r2)] += row[p] * row[r2];
                    }
                }
                q += yt[j] * yt[j];
            }
            for p in 0..d {
                for r2 in p..d {
                    s[(p, r2)] /= m as f64;
                    s[(r2, p)] = s[(p, r2)];
                }
            }
            v /= m as f64;
            q /= m as f64;
            s_hat.push(s);
            xy.push(v);
            y2.push(q);
        }
        Ok(Self {
            d,
            k,
            m,
            alpha_x,
            x: xt,
            y: yt,
            s_hat,
            xy,
            y2,
        })
    }

    /// Bucket residual correlation vector w_i(g) with
    /// <Y - g, f>_i = <w_i, f>.
    fn residual_corr(&self, i: usize, g: &DVector<f64>) -> DVector<f64> {
        &self.xy[i] - &self.s_hat[i] * g
    }

    /// Bucket empirical loss L_i(g) as a number.
    fn loss_at(&self, i: usize, g: &DVector<f64>) -> f64 {
        (g.transpose() * &self.s_hat[i] * g)[(0, 0)] - 2.0 * self.xy[i].dot(g) + self.y2[i]
    }

    /// Bucket empirical loss L_i(f) as a degree-2 polynomial in f.
    fn loss_poly(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::quadratic_form(&self.s_hat[i], 0);
        for j in 0..self.d {
            p.add_term(Monomial::var(j), -2.0 * self.xy[i][j]);
        }
        p.add_term(Monomial::one(), self.y2[i]);
        p
    }

    pub fn bucket_second_moment(&self, i: usize) -> &DMatrix<f64> {
        &self.s_hat[i]
    }
}

#[derive(Debug, Clone)]
pub struct RegConfig {
    pub k: usize,
    pub delta: f64,
    /// Target radius; r^2 = r_const (d/n + log(1/delta)/n) when derived.
    pub r: f64,
    pub feasible: f64,
    pub certify_cap: f64,
    pub noise_cap: f64,
    pub c_up: f64,
    pub c_low: f64,
    pub contraction: f64,
    pub c_cert: f64,
    /// Step-length search probes.
    pub probes: usize,
    pub basis: BasisMode,
    pub sdp: SolveOptions,
}

impl RegConfig {
    /// Defaults derived from (n, d, delta): k = ceil(3 log2(1/delta)),
    /// r^2 = d/n + log(1/delta)/n, alpha_x = 3 sqrt(d).
    pub fn from_problem(n: usize, d: usize, delta: f64) -> Self {
        let k = (3.0 * (1.0 / delta).log2()).ceil().max(1.0) as usize;
        let r = ((d as f64) / (n as f64) + (1.0 / delta).ln() / (n as f64)).sqrt();
        Self {
            k,
            delta,
            r,
            feasible: 0.998,
            certify_cap: 0.1,
            noise_cap: 0.001,
            c_up: 1.01,
            c_low: 0.99,
            contraction: 0.999,
            c_cert: 10.0,
            probes: 40,
            basis: BasisMode::Partial,
            sdp: SolveOptions {
                gap_tol: 1e-7,
                ..SolveOptions::default()
            },
        }
    }

    pub fn alpha_x(d: usize) -> f64 {
        3.0 * (d as f64).sqrt()
    }
}

/// Ordinary least squares through the pseudoinverse (total, even for
/// singular designs).
pub fn ols_init(data: &RegDataset) -> DVector<f64> {
    let xtx = data.x.transpose() * &data.x;
    let xty = data.x.transpose() * &data.y;
    let svd = xtx.svd(true, true);
    match svd.pseudo_inverse(1e-12) {
        Ok(pinv) => pinv * xty,
        Err(_) => DVector::zeros(data.d),
    }
}

fn bucket_program_value(
    data: &RegDataset,
    g: &DVector<f64>,
    r: f64,
    cfg: &RegConfig,
) -> Result<(f64, PseudoExpectation), RegressError> {
    let d = data.d;
    let k = data.k;
    let basis = MonomialBasis::build(d, k, cfg.basis);
    let mut objective = Polynomial::zero();
    let mut equalities = vec![Polynomial::sphere(d)];
    let mut inequalities = Vec::with_capacity(k);
    for i in 0..k {
        let b = d + i;
        objective.add_term(Monomial::var(b), 1.0);
        equalities.push(Polynomial::idempotence(b));
        let w = data.residual_corr(i, g);
        // h_i = b_i <w_i, f> - r b_i
        let mut h = Polynomial::zero();
        for j in 0..d {
            h.add_term(Monomial::from_pairs(vec![(j, 1), (b, 1)]), w[j]);
        }
        h.add_term(Monomial::var(b), -r);
        inequalities.push(h);
    }
    let solved = compile_program(
        &Program {
            objective,
            equalities,
            inequalities,
        },
        &basis,
    )?
    .solve(&cfg.sdp)?;
    Ok((solved.value, solved.pe))
}

/// Noise correlation program: max pE[sum b_i] s.t. b_i^2 = b_i,
/// ||f||^2 = 1, pE[b_i <Y - g, f>_i] >= r pE[b_i].
pub fn noise_sdp_value(
    data: &RegDataset,
    g: &DVector<f64>,
    r: f64,
    cfg: &RegConfig,
) -> Result<(f64, PseudoExpectation), RegressError> {
    bucket_program_value(data, g, r, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormSide {
    Upper,
    Lower,
}

/// Norm comparison program: max pE[sum_i b_i ||f||^2] subject to
/// pE[||f||^4] <= 1, b_i^2 = b_i, and the bucket norm pE[b_i ||f||_i^2]
/// above (Upper) or below (Lower) c pE[b_i ||f||^2].
pub fn norm_sdp_value(
    data: &RegDataset,
    side: NormSide,
    c: f64,
    cfg: &RegConfig,
) -> Result<(f64, PseudoExpectation), RegressError> {
    let d = data.d;
    let k = data.k;
    let basis = MonomialBasis::build(d, k, cfg.basis);
    let norm2 = Polynomial::quadratic_form(&DMatrix::identity(d, d), 0);
    let norm4 = &norm2 * &norm2;

    let mut objective = Polynomial::zero();
    let mut equalities = Vec::with_capacity(k);
    let mut inequalities = Vec::with_capacity(k + 1);
    // pE[||f||^4] <= 1.
    inequalities.push(&Polynomial::constant(1.0) - &norm4);
    for i in 0..k {
        let b = d + i;
        let bmono = Monomial::var(b);
        objective = &objective + &norm2.mul_monomial(&bmono);
        equalities.push(Polynomial::idempotence(b));
        let bucket_norm = Polynomial::quadratic_form(data.bucket_second_moment(i), 0);
        let h = match side {
            NormSide::Upper => {
                &bucket_norm.mul_monomial(&bmono) - &norm2.mul_monomial(&bmono).scale(c)
            }
            NormSide::Lower => {
                &norm2.mul_monomial(&bmono).scale(c) - &bucket_norm.mul_monomial(&bmono)
            }
        };
        inequalities.push(h);
    }
    let solved = compile_program(
        &Program {
            objective,
            equalities,
            inequalities,
        },
        &basis,
    )?
    .solve(&cfg.sdp)?;
    Ok((solved.value, solved.pe))
}

/// True when the certify program at radius c_cert * r stays below
/// certify_cap * k. Solver trouble keeps descending (returns false).
pub fn certify_done(data: &RegDataset, g: &DVector<f64>, cfg: &RegConfig) -> bool {
    match bucket_program_value(data, g, cfg.c_cert * cfg.r, cfg) {
        Ok((value, pe)) => {
            if pe.converged(1e-5) {
                value < cfg.certify_cap * data.k as f64
            } else {
                log::warn!("certify program status {:?}; keeping descending", pe.status);
                false
            }
        }
        Err(e) => {
            log::warn!("certify program failed ({e}); keeping descending");
            false
        }
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Certify,
    Next { next: DVector<f64>, s: f64 },
}

/// Feasibility of the step program at step length s: margin of
/// b_i^2 = b_i, sum_i b_i = feasible * k, ||f - g||^2 = s^2,
/// pE[b_i L_i(f)] <= pE[b_i (L_i(g) - 0.97 s^2)].
fn step_feasible(
    data: &RegDataset,
    g: &DVector<f64>,
    s: f64,
    cfg: &RegConfig,
) -> Result<Option<DVector<f64>>, RegressError> {
    let d = data.d;
    let k = data.k;
    let basis = MonomialBasis::build(d, k, cfg.basis);

    let mut equalities = Vec::with_capacity(k + 2);
    // ||f - g||^2 = s^2.
    let mut sphere_g = Polynomial::quadratic_form(&DMatrix::identity(d, d), 0);
    for j in 0..d {
        sphere_g.add_term(Monomial::var(j), -2.0 * g[j]);
    }
    sphere_g.add_term(Monomial::one(), g.norm_squared() - s * s);
    equalities.push(sphere_g);
    // sum b_i = feasible * k.
    let mut mass = Polynomial::constant(-cfg.feasible * k as f64);
    for i in 0..k {
        mass.add_term(Monomial::var(d + i), 1.0);
        equalities.push(Polynomial::idempotence(d + i));
    }
    equalities.push(mass);

    let mut inequalities = Vec::with_capacity(k);
    for i in 0..k {
        let b = Monomial::var(d + i);
        let budget = data.loss_at(i, g) - 0.97 * s * s;
        // h_i = b_i budget - b_i L_i(f)
        let mut h = Polynomial::zero();
        h.add_term(b.clone(), budget);
        h = &h - &data.loss_poly(i).mul_monomial(&b);
        inequalities.push(h);
    }

    let solved = compile_feasibility(&equalities, &inequalities, &basis)?.solve(&cfg.sdp)?;
    log::debug!(
        "step probe s={s}: status {:?} margin {} gap {:.2e} iters {}",
        solved.pe.status,
        solved.value,
        solved.pe.gap,
        solved.iterations
    );
    let scale = 1.0
        + inequalities
            .iter()
            .flat_map(|p| p.terms())
            .fold(0.0f64, |m, (_, c)| m.max(c.abs()));
    let tol = 1e-6 * scale;
    let ok = solved.pe.converged(1e-5) && solved.value >= -tol;
    if ok {
        Ok(Some(solved.pe.first_moments(d)))
    } else {
        Ok(None)
    }
}

/// One descent step: certify, or binary-search the largest feasible step
/// length s and return the first moment pE[f] of the feasible program.
pub fn descent_step(
    data: &RegDataset,
    g: &DVector<f64>,
    cfg: &RegConfig,
) -> Result<StepOutcome, RegressError> {
    if certify_done(data, g, cfg) {
        return Ok(StepOutcome::Certify);
    }
    let y_scale = (data.y2.iter().sum::<f64>() / data.k as f64).sqrt();
    let lo0 = cfg.r;
    let hi0 = (g.norm() + y_scale + cfg.r) * 2.0;

    // Feasibility is monotone: feasible below the boundary near
    // 1.01 ||g - f*||, infeasible above. Search for the largest feasible s.
    if let Some(next) = step_feasible(data, g, hi0, cfg)? {
        return Ok(StepOutcome::Next { next, s: hi0 });
    }
    let lo_result = step_feasible(data, g, lo0, cfg)?;
    if lo_result.is_none() {
        return Err(RegressError::Stalled {
            lo: lo0,
            hi: hi0,
            probes: cfg.probes,
        });
    }
    let mut lo = lo0;
    let mut hi = hi0;
    let mut best = lo_result;
    let mut probes_left = cfg.probes.saturating_sub(2);
    while probes_left > 0 && hi / lo > 1.01 {
        let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        probes_left -= 1;
        match step_feasible(data, g, mid, cfg)? {
            Some(next) => {
                best = Some(next);
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let next = best.expect("feasible point recorded");
    Ok(StepOutcome::Next { next, s: lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Certified,
    StepBudget,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub f_hat: DVector<f64>,
    pub steps: usize,
    pub status: FitStatus,
}

/// OLS init, then descend until the certificate fires or progress stops.
pub fn estimate_regression(data: &RegDataset, cfg: &RegConfig) -> Result<Fit, RegressError> {
    let mut g = ols_init(data);
    let mut steps = 0usize;
    let mut best = g.clone();
    let mut best_s = f64::INFINITY;
    let mut flat = 0usize;
    let mut budget = 10_000usize;
    loop {
        match descent_step(data, &g, cfg) {
            Ok(StepOutcome::Certify) => {
                return Ok(Fit {
                    f_hat: g,
                    steps,
                    status: FitStatus::Certified,
                })
            }
            Ok(StepOutcome::Next { next, s }) => {
                if steps == 0 {
                    let init = s.max(cfg.r);
                    budget = ((2.0 * (init / cfg.r).max(1.0).ln() / (1.0 / cfg.contraction).ln())
                        .ceil() as usize)
                        .clamp(1, 10_000);
                }
                if s < best_s * 0.995 {
                    best_s = s;
                    best = next.clone();
                    flat = 0;
                } else {
                    flat += 1;
                }
                g = next;
                steps += 1;
                if flat >= 5 {
                    return Ok(Fit {
                        f_hat: best,
                        steps,
                        status: FitStatus::Stalled,
                    });
                }
                if steps >= budget {
                    return Ok(Fit {
                        f_hat: g,
                        steps,
                        status: FitStatus::StepBudget,
                    });
                }
            }
            Err(RegressError::Stalled { .. }) => {
                return Ok(Fit {
                    f_hat: if best_s.is_finite() { best } else { g },
                    steps,
                    status: FitStatus::Stalled,
                })
            }
            Err(e) => return Err(e),
        }
    }
}
