use crate::problem::{BlockMat, SdpError, SdpProblem, SparseSym};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    InfeasibleSuspected,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative duality-gap target.
    pub gap_tol: f64,
    /// Relative primal/dual feasibility target.
    pub feas_tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

/// Per-iteration record, kept for diagnostics and the weak-duality checks.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: BlockMat,
    pub y: DVector<f64>,
    pub s: BlockMat,
    pub objective: f64,
    pub status: SdpStatus,
    pub gap: f64,
    /// Final scaled primal and dual infeasibilities.
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub iterations: usize,
    pub history: Vec<IterRecord>,
}

struct Workspace {
    sizes: Vec<usize>,
    c_dense: BlockMat,
}

fn apply_a(constraints: &[SparseSym], x: &BlockMat) -> DVector<f64> {
    DVector::from_iterator(constraints.len(), constraints.iter().map(|a| a.dot(x)))
}

fn apply_at(constraints: &[SparseSym], y: &DVector<f64>, sizes: &[usize]) -> BlockMat {
    let mut out = BlockMat::zeros(sizes);
    for (a, &yi) in constraints.iter().zip(y.iter()) {
        a.add_into(&mut out, yi);
    }
    out
}

fn block_chol(m: &BlockMat) -> Option<Vec<Cholesky<f64, nalgebra::Dyn>>> {
    m.blocks
        .iter()
        .map(|b| Cholesky::new(b.clone()))
        .collect()
}

fn block_inverse(chol: &[Cholesky<f64, nalgebra::Dyn>]) -> BlockMat {
    BlockMat {
        blocks: chol.iter().map(|c| c.inverse()).collect(),
    }
}

/// Largest step alpha in [0, 1] keeping m + alpha*dm positive definite, with
/// fraction-to-boundary 0.98.
fn step_length(chol: &[Cholesky<f64, nalgebra::Dyn>], dm: &BlockMat) -> f64 {
    let mut alpha: f64 = 1.0;
    for (c, d) in chol.iter().zip(&dm.blocks) {
        if d.nrows() == 0 {
            continue;
        }
        // lambda_min of L^{-1} dM L^{-T}.
        let l = c.l();
        let mut w = d.clone();
        let _ = l.solve_lower_triangular_mut(&mut w);
        let mut wt = w.transpose();
        let _ = l.solve_lower_triangular_mut(&mut wt);
        let mut sym = wt.transpose();
        let symt = sym.transpose();
        sym += symt;
        sym *= 0.5;
        let eig = SymmetricEigen::new(sym);
        let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if lmin < 0.0 {
            alpha = alpha.min(-0.98 / lmin);
        }
    }
    alpha.min(1.0)
}

/// Computes W_j = X A_j Z^{-1} exploiting the sparsity of A_j.
fn sandwich(x: &BlockMat, a: &SparseSym, zinv: &BlockMat, sizes: &[usize]) -> BlockMat {
    let mut out = BlockMat::zeros(sizes);
    for &(b, r, c, v) in &a.entries {
        let xb = &x.blocks[b];
        let zb = &zinv.blocks[b];
        let ob = &mut out.blocks[b];
        let n = xb.nrows();
        // v * (X[:,r] Zinv[c,:] + [r != c] X[:,c] Zinv[r,:])
        for i in 0..n {
            let xir = xb[(i, r)];
            let xic = xb[(i, c)];
            for j in 0..n {
                let mut t = xir * zb[(c, j)];
                if r != c {
                    t += xic * zb[(r, j)];
                }
                ob[(i, j)] += v * t;
            }
        }
    }
    out
}

fn sparse_dot_general(a: &SparseSym, w: &BlockMat) -> f64 {
    let mut acc = 0.0;
    for &(b, r, c, v) in &a.entries {
        let wb = &w.blocks[b];
        acc += if r == c {
            v * wb[(r, r)]
        } else {
            v * (wb[(r, c)] + wb[(c, r)])
        };
    }
    acc
}

fn frob_norm(a: &SparseSym) -> f64 {
    a.entries
        .iter()
        .map(|&(_, r, c, v)| if r == c { v * v } else { 2.0 * v * v })
        .sum::<f64>()
        .sqrt()
}

/// Solves the standard-form SDP by a primal-dual path-following method
/// (HKM direction, Mehrotra predictor-corrector, dense Schur complement).
///
/// Constraint rows and the objective are normalized internally; the solution
/// is mapped back to the original units.
pub fn solve_sdp(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    problem.validate()?;

    // Row and objective scaling for Schur-complement conditioning.
    let mut scaled = problem.clone();
    let mut row_scale = Vec::with_capacity(scaled.constraints.len());
    for (a, b) in scaled.constraints.iter_mut().zip(scaled.rhs.iter_mut()) {
        let norm = frob_norm(a).max(1e-300);
        for e in &mut a.entries {
            e.3 /= norm;
        }
        *b /= norm;
        row_scale.push(norm);
    }
    let obj_scale = frob_norm(&scaled.objective).max(1.0);
    for e in &mut scaled.objective.entries {
        e.3 /= obj_scale;
    }
    let mut sol = solve_scaled(&scaled, opts)?;

    // Map back: x is invariant, y_i = obj_scale * y_i / row_scale_i,
    // Z = obj_scale * Z_scaled.
    for (yi, norm) in sol.y.iter_mut().zip(&row_scale) {
        *yi *= obj_scale / norm;
    }
    for blk in &mut sol.s.blocks {
        *blk *= obj_scale;
    }
    let mut c_dense = BlockMat::zeros(&problem.block_sizes);
    problem.objective.add_into(&mut c_dense, 1.0);
    sol.objective = c_dense.dot(&sol.x);
    // Residuals and gap in original units.
    let a_inf = problem.rhs.amax().max(0.0);
    let c_inf = c_dense.max_abs();
    let ax: DVector<f64> = apply_a(&problem.constraints, &sol.x);
    sol.primal_infeas = (&problem.rhs - &ax).amax() / (1.0 + a_inf);
    let mut rd = c_dense.clone();
    rd.axpy(1.0, &sol.s);
    let aty = apply_at(&problem.constraints, &sol.y, &problem.block_sizes);
    rd.axpy(-1.0, &aty);
    sol.dual_infeas = rd.max_abs() / (1.0 + c_inf);
    let dobj = problem.rhs.dot(&sol.y);
    sol.gap = sol.x.dot(&sol.s).abs() / (1.0 + sol.objective.abs() + dobj.abs());
    Ok(sol)
}

fn solve_scaled(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    let sizes = problem.block_sizes.clone();
    let m = problem.constraints.len();
    let total_dim: usize = sizes.iter().sum();
    let nf = total_dim as f64;

    let mut c_dense = BlockMat::zeros(&sizes);
    problem.objective.add_into(&mut c_dense, 1.0);
    let ws = Workspace { sizes, c_dense };

    let a_inf = problem.rhs.amax().max(0.0);
    let c_inf = ws.c_dense.max_abs();
    let tau = 1.0 + a_inf + c_inf;

    let mut x = BlockMat::identity(&ws.sizes, tau);
    let mut z = BlockMat::identity(&ws.sizes, tau);
    let mut y = DVector::<f64>::zeros(m);

    let mut history: Vec<IterRecord> = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut diverge_count = 0usize;
    let mut prev_gap = f64::INFINITY;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let pobj = ws.c_dense.dot(&x);
        let dobj = problem.rhs.dot(&y);
        let gap_abs = x.dot(&z);
        let rel_gap = gap_abs.abs() / (1.0 + pobj.abs() + dobj.abs());

        let ax = apply_a(&problem.constraints, &x);
        let rp = &problem.rhs - &ax;
        let p_inf = rp.amax() / (1.0 + a_inf);

        // Dual residual Rd = C + Z - A*(y).
        let mut rd = ws.c_dense.clone();
        rd.axpy(1.0, &z);
        let aty = apply_at(&problem.constraints, &y, &ws.sizes);
        rd.axpy(-1.0, &aty);
        let d_inf = rd.max_abs() / (1.0 + c_inf);

        history.push(IterRecord {
            primal_obj: pobj,
            dual_obj: dobj,
            gap: gap_abs,
            primal_infeas: p_inf,
            dual_infeas: d_inf,
        });
        if opts.verbose {
            log::debug!(
                "iter {iter}: pobj={pobj:.9e} dobj={dobj:.9e} gap={rel_gap:.3e} pinf={p_inf:.3e} dinf={d_inf:.3e}"
            );
        }

        if rel_gap <= opts.gap_tol && p_inf <= opts.feas_tol && d_inf <= opts.feas_tol {
            status = SdpStatus::Optimal;
            break;
        }

        if gap_abs > prev_gap * (1.0 + 1e-12) {
            diverge_count += 1;
            if diverge_count >= 30 {
                status = SdpStatus::InfeasibleSuspected;
                break;
            }
        } else {
            diverge_count = 0;
        }
        if x.max_abs() > 1e14 * tau || gap_abs > 1e14 * (1.0 + tau * tau) {
            status = SdpStatus::InfeasibleSuspected;
            break;
        }
        prev_gap = gap_abs;

        let x_chol = match block_chol(&x) {
            Some(c) => c,
            None => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let z_chol = match block_chol(&z) {
            Some(c) => c,
            None => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let zinv = block_inverse(&z_chol);
        let mu = gap_abs / nf;
        if mu < 1e-16 * (1.0 + tau * tau) {
            // Complementarity is at the numerical floor; further Newton
            // systems are meaningless.
            status = SdpStatus::NumericalFailure;
            break;
        }

        // Schur complement M_ij = <A_i, X A_j Z^{-1}>, symmetric PD.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let w = sandwich(&x, &problem.constraints[j], &zinv, &ws.sizes);
            for i in 0..m {
                schur[(i, j)] = sparse_dot_general(&problem.constraints[i], &w);
            }
        }
        let mut schur_sym = &schur + schur.transpose();
        schur_sym *= 0.5;
        let schur_fact = {
            let diag_scale = 1.0 + schur_sym.diagonal().amax();
            let mut fact = Cholesky::new(schur_sym.clone());
            let mut ridge = 1e-13 * diag_scale;
            while fact.is_none() && ridge < 1e-4 * diag_scale {
                let mut reg = schur_sym.clone();
                for i in 0..m {
                    reg[(i, i)] += ridge;
                }
                fact = Cholesky::new(reg);
                ridge *= 10.0;
            }
            match fact {
                Some(f) => f,
                None => {
                    status = SdpStatus::NumericalFailure;
                    break;
                }
            }
        };
        // One step of iterative refinement compensates for the ridge.
        let schur_solve = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut dy = schur_fact.solve(rhs);
            for _ in 0..2 {
                let resid = rhs - &schur_sym * &dy;
                if resid.amax() <= 1e-14 * (1.0 + rhs.amax()) {
                    break;
                }
                dy += schur_fact.solve(&resid);
            }
            dy
        };

        // A(X Rd Z^{-1}) appears in both predictor and corrector rhs.
        let x_rd_zinv = {
            let mut t = BlockMat::zeros(&ws.sizes);
            for ((tb, xb), (rb, zb)) in t
                .blocks
                .iter_mut()
                .zip(&x.blocks)
                .zip(rd.blocks.iter().zip(&zinv.blocks))
            {
                *tb = xb * rb * zb;
            }
            t
        };
        let a_xrdz = apply_a(&problem.constraints, &x_rd_zinv);
        let a_zinv = apply_a(&problem.constraints, &zinv);

        let newton = |sigma_mu: f64, corr: Option<&BlockMat>| -> (BlockMat, DVector<f64>, BlockMat) {
            // M dy = sigma*mu*A(Z^{-1}) + A(X Rd Z^{-1}) - a - A(corr Z^{-1})
            let mut rhs = &a_zinv * sigma_mu;
            rhs += &a_xrdz;
            rhs -= &problem.rhs;
            if let Some(cterm) = corr {
                let mut t = BlockMat::zeros(&ws.sizes);
                for (tb, (cb, zb)) in t.blocks.iter_mut().zip(cterm.blocks.iter().zip(&zinv.blocks))
                {
                    *tb = cb * zb;
                }
                rhs -= apply_a(&problem.constraints, &t);
            }
            let dy = schur_solve(&rhs);
            // dZ = A*(dy) - Rd
            let mut dz = apply_at(&problem.constraints, &dy, &ws.sizes);
            dz.axpy(-1.0, &rd);
            // dX = sigma*mu*Z^{-1} - X - X dZ Z^{-1} - corr Z^{-1}, symmetrized.
            let mut dx = BlockMat::zeros(&ws.sizes);
            for (i, db) in dx.blocks.iter_mut().enumerate() {
                let xb = &x.blocks[i];
                let zb = &zinv.blocks[i];
                let mut t = zb * sigma_mu;
                t -= xb;
                t -= xb * &dz.blocks[i] * zb;
                if let Some(cterm) = corr {
                    t -= &cterm.blocks[i] * zb;
                }
                *db = t;
            }
            dx.symmetrize();
            (dx, dy, dz)
        };

        // Predictor (affine-scaling) direction.
        let (dx_aff, _dy_aff, dz_aff) = newton(0.0, None);
        let ap_aff = step_length(&x_chol, &dx_aff);
        let ad_aff = step_length(&z_chol, &dz_aff);
        let mut x_trial = x.clone();
        x_trial.axpy(ap_aff, &dx_aff);
        let mut z_trial = z.clone();
        z_trial.axpy(ad_aff, &dz_aff);
        let mu_aff = x_trial.dot(&z_trial) / nf;
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-8, 1.0);

        // Corrector with second-order term dX_aff dZ_aff.
        let mut corr = BlockMat::zeros(&ws.sizes);
        for (cb, (dxb, dzb)) in corr
            .blocks
            .iter_mut()
            .zip(dx_aff.blocks.iter().zip(&dz_aff.blocks))
        {
            *cb = dxb * dzb;
        }
        let (dx, dy, dz) = newton(sigma * mu, Some(&corr));
        let ap = step_length(&x_chol, &dx);
        let ad = step_length(&z_chol, &dz);

        x.axpy(ap, &dx);
        x.symmetrize();
        y += &dy * ad;
        z.axpy(ad, &dz);
        z.symmetrize();
    }

    iterations = iterations.max(history.len().saturating_sub(1));

    let pobj = ws.c_dense.dot(&x);
    let dobj = problem.rhs.dot(&y);
    let rel_gap = (x.dot(&z)).abs() / (1.0 + pobj.abs() + dobj.abs());
    let (pinf, dinf) = {
        let ax = apply_a(&problem.constraints, &x);
        let rp = &problem.rhs - &ax;
        let mut rd = ws.c_dense.clone();
        rd.axpy(1.0, &z);
        let aty = apply_at(&problem.constraints, &y, &ws.sizes);
        rd.axpy(-1.0, &aty);
        (rp.amax() / (1.0 + a_inf), rd.max_abs() / (1.0 + c_inf))
    };
    Ok(SdpSolution {
        x,
        y,
        s: z,
        objective: pobj,
        status,
        gap: rel_gap,
        primal_infeas: pinf,
        dual_infeas: dinf,
        iterations,
        history,
    })
}
