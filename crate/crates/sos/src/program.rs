use crate::basis::{BasisMode, MonomialBasis};
use crate::poly::{Monomial, Polynomial};
use ht_sdp::{solve_sdp, SdpError, SdpProblem, SdpSolution, SdpStatus, SolveOptions, SparseSym};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use thiserror::Error;

/// Bound on |t_pos| + |t_neg| in margin-mode programs; inequalities are
/// normalized to unit coefficient scale, so attainable margins are O(1).
const MARGIN_CAP: f64 = 1e2;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("term {term} is not representable over the chosen basis")]
    NotRepresentable { term: String },
    #[error("moment for monomial {monomial} is not available")]
    MissingMoment { monomial: String },
    #[error("sdp error: {0}")]
    Sdp(#[from] SdpError),
    #[error("no matrices supplied")]
    EmptyInput,
}

/// A constrained pseudoexpectation program: maximize pE[objective] subject to
/// polynomial equalities g = 0 and scalar inequalities pE[h] >= 0.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub objective: Polynomial,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
}

/// A compiled program: the standard-form SDP plus the bookkeeping needed to
/// read pseudomoments back out of a solution.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub problem: SdpProblem,
    basis: MonomialBasis,
    canon: BTreeMap<Monomial, (usize, usize)>,
    msize: usize,
}

fn add_functional(a: &mut SparseSym, p: usize, q: usize, c: f64) {
    if p == q {
        a.add(0, p, q, c);
    } else {
        a.add(0, p, q, c / 2.0);
    }
}

/// Builds the linear functional of the moment-matrix entries representing
/// pE[poly]. Fails if some monomial is not a product of two basis monomials.
fn functional(
    poly: &Polynomial,
    canon: &BTreeMap<Monomial, (usize, usize)>,
    d: usize,
) -> Result<SparseSym, SosError> {
    let mut a = SparseSym::new();
    for (m, c) in poly.terms() {
        let &(p, q) = canon.get(m).ok_or_else(|| SosError::NotRepresentable {
            term: m.display(d),
        })?;
        add_functional(&mut a, p, q, c);
    }
    Ok(a)
}

fn representable(poly: &Polynomial, canon: &BTreeMap<Monomial, (usize, usize)>) -> bool {
    poly.terms().all(|(m, _)| canon.contains_key(m))
}

fn compile_impl(
    objective: Option<&Polynomial>,
    equalities: &[Polynomial],
    inequalities: &[Polynomial],
    basis: &MonomialBasis,
    margin: bool,
) -> Result<Compiled, SosError> {
    let n = basis.len();
    let d = basis.d;

    // Canonical positions: the first (p, q) with p <= q whose basis product
    // equals the monomial. Later occurrences are tied by equality constraints.
    let mut canon: BTreeMap<Monomial, (usize, usize)> = BTreeMap::new();
    let mut duplicates: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for p in 0..n {
        for q in p..n {
            let m = basis.entries()[p].mul(&basis.entries()[q]);
            match canon.get(&m) {
                None => {
                    canon.insert(m, (p, q));
                }
                Some(&(cp, cq)) => duplicates.push(((p, q), (cp, cq))),
            }
        }
    }

    let n_ineq = inequalities.len();
    let mut block_sizes = vec![n];
    block_sizes.extend(std::iter::repeat(1).take(n_ineq));
    // Margin mode splits the free margin t = t_pos - t_neg into two
    // nonnegative scalars and caps t_pos + t_neg, so the optimal face stays
    // bounded (otherwise the central path diverges along the shared ray).
    let (t_pos_block, t_neg_block, cap_block) = if margin {
        block_sizes.push(1);
        block_sizes.push(1);
        block_sizes.push(1);
        (n_ineq + 1, n_ineq + 2, n_ineq + 3)
    } else {
        (0, 0, 0)
    };
    let mut problem = SdpProblem::new(block_sizes);

    // pE[1] = 1.
    let mut a_one = SparseSym::new();
    add_functional(&mut a_one, 0, 0, 1.0);
    problem.add_constraint(a_one, 1.0);

    // Moment-matrix consistency: equal products share a value.
    for &((p, q), (cp, cq)) in &duplicates {
        let mut a = SparseSym::new();
        add_functional(&mut a, p, q, 1.0);
        add_functional(&mut a, cp, cq, -1.0);
        problem.add_constraint(a, 0.0);
    }

    // Each equality g = 0 is localized against every basis monomial whose
    // product stays representable; the scalar level (q = 1) must compile.
    for g in equalities {
        for (qi, qmono) in basis.entries().iter().enumerate() {
            let gq = g.mul_monomial(qmono);
            if qi == 0 {
                let a = functional(&gq, &canon, d)?;
                problem.add_constraint(a, 0.0);
            } else if representable(&gq, &canon) {
                let a = functional(&gq, &canon, d)?;
                problem.add_constraint(a, 0.0);
            }
        }
    }

    // Scalar inequalities pE[h] >= 0 (or >= t in margin mode) via a
    // nonnegative diagonal slack block each.
    for (j, h) in inequalities.iter().enumerate() {
        let mut a = functional(h, &canon, d)?;
        a.add(1 + j, 0, 0, -1.0);
        if margin {
            a.add(t_pos_block, 0, 0, -1.0);
            a.add(t_neg_block, 0, 0, 1.0);
        }
        problem.add_constraint(a, 0.0);
    }

    match objective {
        Some(obj) => {
            problem.objective = functional(obj, &canon, d)?;
        }
        None => {
            problem.objective.add(t_pos_block, 0, 0, 1.0);
            problem.objective.add(t_neg_block, 0, 0, -1.0);
            let mut cap = SparseSym::new();
            cap.add(t_pos_block, 0, 0, 1.0);
            cap.add(t_neg_block, 0, 0, 1.0);
            cap.add(cap_block, 0, 0, 1.0);
            problem.add_constraint(cap, MARGIN_CAP);
        }
    }

    problem.prune_redundant()?;

    Ok(Compiled {
        problem,
        basis: basis.clone(),
        canon,
        msize: n,
    })
}

/// Compiles a pseudoexpectation program into a standard-form SDP:
/// the moment matrix is the PSD block, pE[1] = 1, each equality is localized
/// by basis monomials, and each inequality becomes a scalar slack row.
pub fn compile_program(program: &Program, basis: &MonomialBasis) -> Result<Compiled, SosError> {
    compile_impl(
        Some(&program.objective),
        &program.equalities,
        &program.inequalities,
        basis,
        false,
    )
}

/// Feasibility variant: maximizes a uniform margin t subject to
/// pE[h_j] >= t and the equalities. The program is feasible in the
/// pE[h_j] >= 0 sense exactly when the optimal margin is >= 0. Each
/// inequality is normalized to unit maximum coefficient so the margin is
/// comparable across rows.
pub fn compile_feasibility(
    equalities: &[Polynomial],
    inequalities: &[Polynomial],
    basis: &MonomialBasis,
) -> Result<Compiled, SosError> {
    let normalized: Vec<Polynomial> = inequalities
        .iter()
        .map(|h| {
            let max = h.terms().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
            if max > 0.0 {
                h.scale(1.0 / max)
            } else {
                h.clone()
            }
        })
        .collect();
    compile_impl(None, equalities, &normalized, basis, true)
}

/// Moment vector of a solved program, with the PSD moment matrix.
#[derive(Debug, Clone)]
pub struct PseudoExpectation {
    pub d: usize,
    pub k: usize,
    pub mode: BasisMode,
    moments: BTreeMap<Monomial, f64>,
    pub moment_matrix: DMatrix<f64>,
    pub status: SdpStatus,
    pub gap: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub value: f64,
    pub pe: PseudoExpectation,
    pub iterations: usize,
}

impl Compiled {
    pub fn solve(&self, opts: &SolveOptions) -> Result<Solved, SosError> {
        let sol: SdpSolution = solve_sdp(&self.problem, opts)?;
        let mm = sol.x.blocks[0].clone();
        let mut moments = BTreeMap::new();
        for (m, &(p, q)) in &self.canon {
            moments.insert(m.clone(), mm[(p, q)]);
        }
        Ok(Solved {
            value: sol.objective,
            pe: PseudoExpectation {
                d: self.basis.d,
                k: self.basis.k,
                mode: self.basis.mode,
                moments,
                moment_matrix: mm,
                status: sol.status,
                gap: sol.gap,
                primal_infeas: sol.primal_infeas,
                dual_infeas: sol.dual_infeas,
            },
            iterations: sol.iterations,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn moment_matrix_size(&self) -> usize {
        self.msize
    }
}

impl PseudoExpectation {
    pub fn moment(&self, m: &Monomial) -> Option<f64> {
        self.moments.get(m).copied()
    }

    /// Evaluates pE[p] as a linear combination of stored moments.
    pub fn eval(&self, p: &Polynomial) -> Result<f64, SosError> {
        let mut acc = 0.0;
        for (m, c) in p.terms() {
            let v = self.moment(m).ok_or_else(|| SosError::MissingMoment {
                monomial: m.display(self.d),
            })?;
            acc += c * v;
        }
        Ok(acc)
    }

    /// The matrix pE[u_i u_j]; symmetric by construction. Meaningful when
    /// the program constrained u to the unit sphere, in which case its trace
    /// is 1 up to solver tolerance.
    pub fn extract_uu(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut g = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let m = Monomial::from_pairs(vec![(i, 1), (j, 1)]);
                let v = self.moment(&m).unwrap_or(0.0);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// First moments (pE[x_0], ..., pE[x_{n-1}]).
    pub fn first_moments(&self, n: usize) -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|i| self.moment(&Monomial::var(i)).unwrap_or(0.0)))
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Optimal, or stopped (iteration cap / numerical stall) with gap and
    /// feasibility residuals below `tol`. Degenerate programs whose optimal
    /// face has no interior often end this way with a perfectly usable
    /// approximate solution.
    pub fn converged(&self, tol: f64) -> bool {
        self.status == SdpStatus::Optimal
            || (self.status != SdpStatus::InfeasibleSuspected
                && self.gap <= tol
                && self.primal_infeas <= tol
                && self.dual_infeas <= tol)
    }

    /// Validity residuals used by the test suites.
    pub fn diagnostics(&self, sphere_active: bool) -> Diagnostics {
        let one = self.moment(&Monomial::one()).unwrap_or(f64::NAN);
        let eig = nalgebra::SymmetricEigen::new(self.moment_matrix.clone());
        let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));

        let basis = MonomialBasis::build(self.d, self.k, self.mode);
        let mut idem = 0.0f64;
        for j in 0..self.k {
            let b = self.d + j;
            for q in basis.entries() {
                let sq = Monomial::from_pairs(vec![(b, 2)]).mul(q);
                let lin = Monomial::var(b).mul(q);
                if let (Some(a), Some(c)) = (self.moment(&sq), self.moment(&lin)) {
                    idem = idem.max((a - c).abs());
                }
            }
        }
        let mut sphere = 0.0f64;
        if sphere_active {
            for q in basis.entries() {
                let mut lhs = 0.0;
                let mut all = true;
                for i in 0..self.d {
                    let m = Monomial::from_pairs(vec![(i, 2)]).mul(q);
                    match self.moment(&m) {
                        Some(v) => lhs += v,
                        None => {
                            all = false;
                            break;
                        }
                    }
                }
                if let (true, Some(rhs)) = (all, self.moment(q)) {
                    sphere = sphere.max((lhs - rhs).abs());
                }
            }
        }
        Diagnostics {
            pe_one: one,
            min_eig,
            max_idempotence_residual: idem,
            max_sphere_residual: sphere,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    pub pe_one: f64,
    pub min_eig: f64,
    pub max_idempotence_residual: f64,
    pub max_sphere_residual: f64,
}

/// Maximizes pE[sum_i <u, M_i u>] over degree-4 pseudoexpectations on the
/// unit sphere. Equals the top eigenvalue of the sum for a single quadratic
/// form.
pub fn max_pe_quadform(
    mats: &[DMatrix<f64>],
    basis: &MonomialBasis,
    opts: &SolveOptions,
) -> Result<Solved, SosError> {
    if mats.is_empty() {
        return Err(SosError::EmptyInput);
    }
    let mut objective = Polynomial::zero();
    for m in mats {
        objective = &objective + &Polynomial::quadratic_form(m, 0);
    }
    let program = Program {
        objective,
        equalities: vec![Polynomial::sphere(basis.d)],
        inequalities: vec![],
    };
    compile_program(&program, basis)?.solve(opts)
}

/// The right-hand side of the pseudoexpectation matrix-concentration bound:
/// (2(log 2 + r log d)/3) R + 2 sqrt(2 k (log 2 + r log d)) sigma.
pub fn sos_bernstein_bound(r_bound: f64, sigma: f64, k: usize, d: usize, r: usize) -> f64 {
    let logterm = std::f64::consts::LN_2 + (r as f64) * (d as f64).ln();
    (2.0 * logterm / 3.0) * r_bound + 2.0 * (2.0 * (k as f64) * logterm).sqrt() * sigma
}
