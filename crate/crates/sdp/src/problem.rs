use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("entry ({row},{col}) out of range for block {block} of size {size}")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("block index {0} out of range ({1} blocks)")]
    BlockOutOfRange(usize, usize),
    #[error("right-hand side length {0} does not match {1} constraints")]
    RhsMismatch(usize, usize),
    #[error("problem has no constraints")]
    NoConstraints,
    #[error("constraint {0} is linearly dependent with inconsistent right-hand side")]
    InconsistentConstraint(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Sparse symmetric block matrix, stored as upper-triangle triplets
/// `(block, row, col, value)` with `row <= col`. The value is the entry of
/// the symmetric matrix, so an off-diagonal triplet represents two equal
/// entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` to the symmetric entry `(row, col)` of `block`,
    /// canonicalizing to the upper triangle and merging duplicates.
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        for e in &mut self.entries {
            if e.0 == block && e.1 == r && e.2 == c {
                e.3 += value;
                return;
            }
        }
        self.entries.push((block, r, c, value));
    }

    /// <A, X> = sum over the symmetric matrix entries.
    pub fn dot(&self, x: &BlockMat) -> f64 {
        let mut acc = 0.0;
        for &(b, r, c, v) in &self.entries {
            let xb = &x.blocks[b];
            acc += if r == c {
                v * xb[(r, r)]
            } else {
                v * (xb[(r, c)] + xb[(c, r)])
            };
        }
        acc
    }

    /// Adds `scale * A` into the dense block accumulator.
    pub fn add_into(&self, out: &mut BlockMat, scale: f64) {
        for &(b, r, c, v) in &self.entries {
            out.blocks[b][(r, c)] += scale * v;
            if r != c {
                out.blocks[b][(c, r)] += scale * v;
            }
        }
    }

    /// <A, B> for two sparse symmetric matrices.
    pub fn dot_sparse(&self, other: &SparseSym) -> f64 {
        let mut acc = 0.0;
        for &(b, r, c, v) in &self.entries {
            for &(b2, r2, c2, v2) in &other.entries {
                if b == b2 && r == r2 && c == c2 {
                    acc += if r == c { v * v2 } else { 2.0 * v * v2 };
                }
            }
        }
        acc
    }

    pub fn validate(&self, block_sizes: &[usize]) -> Result<(), SdpError> {
        for &(b, r, c, _) in &self.entries {
            let size = *block_sizes
                .get(b)
                .ok_or(SdpError::BlockOutOfRange(b, block_sizes.len()))?;
            if r >= size || c >= size {
                return Err(SdpError::EntryOutOfRange {
                    block: b,
                    row: r,
                    col: c,
                    size,
                });
            }
        }
        Ok(())
    }
}

/// Block-diagonal symmetric matrix with dense blocks.
#[derive(Debug, Clone)]
pub struct BlockMat {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockMat {
    pub fn zeros(block_sizes: &[usize]) -> Self {
        Self {
            blocks: block_sizes
                .iter()
                .map(|&n| DMatrix::zeros(n, n))
                .collect(),
        }
    }

    pub fn identity(block_sizes: &[usize], scale: f64) -> Self {
        Self {
            blocks: block_sizes
                .iter()
                .map(|&n| DMatrix::identity(n, n) * scale)
                .collect(),
        }
    }

    pub fn dot(&self, other: &BlockMat) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &BlockMat) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * alpha;
        }
    }

    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let t = b.transpose();
            *b += t;
            *b *= 0.5;
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Standard-form block-diagonal SDP (maximization).
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    /// Objective matrix C.
    pub objective: SparseSym,
    /// Constraint matrices A_i.
    pub constraints: Vec<SparseSym>,
    /// Right-hand sides a_i.
    pub rhs: DVector<f64>,
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        Self {
            block_sizes,
            objective: SparseSym::new(),
            constraints: Vec::new(),
            rhs: DVector::zeros(0),
        }
    }

    pub fn add_constraint(&mut self, a: SparseSym, rhs: f64) {
        self.constraints.push(a);
        self.rhs = self.rhs.push(rhs);
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        self.objective.validate(&self.block_sizes)?;
        for a in &self.constraints {
            a.validate(&self.block_sizes)?;
        }
        if self.rhs.len() != self.constraints.len() {
            return Err(SdpError::RhsMismatch(self.rhs.len(), self.constraints.len()));
        }
        if self.constraints.is_empty() {
            return Err(SdpError::NoConstraints);
        }
        Ok(())
    }

    /// Drops constraints that are linearly dependent on earlier ones
    /// (numerical rank tolerance 1e-10 on the Gram matrix). Returns the kept
    /// indices. Errors if a dropped row has an inconsistent right-hand side.
    pub fn prune_redundant(&mut self) -> Result<Vec<usize>, SdpError> {
        let m = self.constraints.len();
        let mut kept: Vec<usize> = Vec::with_capacity(m);
        // Incremental Cholesky factor of the Gram matrix of kept rows.
        let mut chol: Vec<Vec<f64>> = Vec::new();
        let mut kept_rhs: Vec<f64> = Vec::new();
        let mut new_constraints = Vec::new();
        let mut new_rhs = Vec::new();
        for i in 0..m {
            let ai = &self.constraints[i];
            let gii = ai.dot_sparse(ai);
            // Gram column against previously kept rows.
            let v: Vec<f64> = kept
                .iter()
                .map(|&j| ai.dot_sparse(&self.constraints[j]))
                .collect();
            // Forward substitution: w = L^{-1} v.
            let kn = kept.len();
            let mut w = v.clone();
            for r in 0..kn {
                for c in 0..r {
                    w[r] -= chol[r][c] * w[c];
                }
                w[r] /= chol[r][r];
            }
            let res = gii - w.iter().map(|x| x * x).sum::<f64>();
            if res <= 1e-10 * gii.max(1e-300) {
                // Dependent row: check right-hand side consistency. The
                // multipliers are lambda = G_kept^{-1} v.
                let mut lambda = w.clone();
                for r in (0..kn).rev() {
                    for c in (r + 1)..kn {
                        lambda[r] -= chol[c][r] * lambda[c];
                    }
                    lambda[r] /= chol[r][r];
                }
                let predicted: f64 = lambda
                    .iter()
                    .zip(kept_rhs.iter())
                    .map(|(l, b)| l * b)
                    .sum();
                let actual = self.rhs[i];
                // The prediction error is amplified by the multiplier size;
                // scale the tolerance accordingly.
                let lam_scale: f64 = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
                let rhs_scale: f64 = kept_rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
                let tol = 1e-6 * (1.0 + actual.abs() + lam_scale * rhs_scale);
                if (predicted - actual).abs() <= tol {
                    continue; // consistent duplicate: drop it
                }
                if res <= 1e-13 * gii.max(1e-300) {
                    // An essentially exact duplicate whose right-hand side
                    // disagrees: the system is contradictory.
                    return Err(SdpError::InconsistentConstraint(i));
                }
                // Numerical gray zone: keep the row and let the solver's
                // regularized Schur factorization deal with it.
            }
            let mut row = w;
            // Floor the pivot so a kept gray-zone row cannot poison the
            // incremental factor.
            row.push(res.max(1e-12 * gii.max(1e-300)).sqrt());
            chol.push(row);
            kept.push(i);
            kept_rhs.push(self.rhs[i]);
            new_constraints.push(ai.clone());
            new_rhs.push(self.rhs[i]);
        }
        self.constraints = new_constraints;
        self.rhs = DVector::from_vec(new_rhs);
        Ok(kept)
    }
}
