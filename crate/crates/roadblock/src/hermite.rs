use crate::mixture::RoadblockError;
use nalgebra::DVector;
use std::collections::BTreeMap;

/// Sparse multi-index over the coordinates of a single vector; entries are
/// strictly positive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HermiteIndex {
    pub alpha: BTreeMap<usize, u32>,
}

impl HermiteIndex {
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Self {
        let mut alpha = BTreeMap::new();
        for &(i, e) in pairs {
            if e > 0 {
                *alpha.entry(i).or_insert(0) += e;
            }
        }
        Self { alpha }
    }

    pub fn total_degree(&self) -> u32 {
        self.alpha.values().sum()
    }
}

/// Multi-index over the md x d sample matrix, keyed by (row, sample).
pub type MatrixIndex = BTreeMap<(usize, usize), u32>;

/// (n - 1)!! with (-1)!! = 1.
pub fn double_factorial_odd(n: u32) -> f64 {
    DOUBLE_FACTORIALS.with(|t| {
        let mut table = t.borrow_mut();
        while table.len() <= n as usize {
            let k = table.len() as u32;
            let prev = if k >= 2 { table[(k - 2) as usize] } else { 1.0 };
            table.push(prev * k as f64);
        }
        if n == 0 {
            1.0
        } else {
            table[n as usize]
        }
    })
}

thread_local! {
    static DOUBLE_FACTORIALS: std::cell::RefCell<Vec<f64>> =
        const { std::cell::RefCell::new(Vec::new()) };
}

/// E H_alpha(y) for y ~ N(0, Id + lambda x x^T): zero for odd |alpha|, else
/// (|alpha| - 1)!! lambda^{|alpha|/2} x^alpha.
pub fn hermite_single_moment(
    alpha: &HermiteIndex,
    lambda: f64,
    x: &DVector<f64>,
) -> Result<f64, RoadblockError> {
    let stretch = lambda.abs() * x.norm_squared();
    if stretch > 1.0 + 1e-12 {
        return Err(RoadblockError::MomentPrecondition(stretch));
    }
    let total = alpha.total_degree();
    if total % 2 == 1 {
        return Ok(0.0);
    }
    let mut mono = 1.0;
    for (&i, &e) in &alpha.alpha {
        mono *= x[i].powi(e as i32);
    }
    Ok(double_factorial_odd(total.saturating_sub(1)) * lambda.powi((total / 2) as i32) * mono)
}

fn degree_maps(alpha: &MatrixIndex, d: usize, m: usize) -> (Vec<u32>, BTreeMap<usize, u32>, Vec<u32>, u32) {
    let mut row_deg = vec![0u32; d];
    let mut sample_deg: BTreeMap<usize, u32> = BTreeMap::new();
    let mut block_deg = Vec::new();
    let mut total = 0u32;
    for (&(row, sample), &e) in alpha {
        row_deg[row] += e;
        *sample_deg.entry(sample).or_insert(0) += e;
        let block = sample / m;
        if block >= block_deg.len() {
            block_deg.resize(block + 1, 0);
        }
        block_deg[block] += e;
        total += e;
    }
    (row_deg, sample_deg, block_deg, total)
}

/// E H_alpha(y) under the planted block-mixture distribution: nonzero only
/// for super-even alpha (every block degree divisible by 4, every per-sample
/// degree even, every row degree even), where it equals
/// (lambda/d)^{|alpha|/2} prod_j (|alpha_j| - 1)!!.
pub fn hermite_planted_moment(alpha: &MatrixIndex, lambda: f64, d: usize, m: usize) -> f64 {
    let (row_deg, sample_deg, block_deg, total) = degree_maps(alpha, d, m);
    if total == 0 {
        return 1.0;
    }
    if row_deg.iter().any(|&r| r % 2 == 1) {
        return 0.0;
    }
    if sample_deg.values().any(|&s| s % 2 == 1) {
        return 0.0;
    }
    if block_deg.iter().any(|&b| b % 4 != 0) {
        return 0.0;
    }
    let mut prod = 1.0;
    for &s in sample_deg.values() {
        prod *= double_factorial_odd(s.saturating_sub(1));
    }
    (lambda / d as f64).powi((total / 2) as i32) * prod
}

/// Number of multi-indices of degree <= t over n cells, used for the
/// enumeration guard.
fn index_space(n: usize, t: u32) -> f64 {
    // C(n + t, t)
    let mut v = 1.0f64;
    for i in 0..t as usize {
        v = v * ((n + t as usize - i) as f64) / ((t as usize - i) as f64);
    }
    v
}

/// sum over |alpha| <= t of (E H_alpha(y))^2 under the planted distribution,
/// by exhaustive enumeration of super-even indices. Includes the constant
/// term 1.
pub fn low_degree_norm(t: u32, lambda: f64, d: usize, m: usize) -> Result<f64, RoadblockError> {
    if t % 2 == 1 {
        return Err(RoadblockError::OddDegree(t));
    }
    let cells = d * d * m; // d rows x md samples
    let space = index_space(cells, t);
    if space > 1e7 {
        return Err(RoadblockError::EnumerationGuard(space));
    }

    // Cells in sample-major order so sample and block parity prune early.
    let md = d * m;
    let mut acc = 1.0; // constant term

    // Recursive enumeration over cells (sample, row).
    fn rec(
        cell: usize,
        remaining: u32,
        sample_deg: u32,
        block_deg: u32,
        row_deg: &mut [u32],
        lambda: f64,
        d: usize,
        m: usize,
        md: usize,
        dfprod: f64,
        total: u32,
        acc: &mut f64,
    ) {
        if cell == md * d || remaining == 0 {
            // Degrees past this point are all zero; the open sample/block
            // must close with valid parity.
            if remaining == 0 && cell < md * d {
                if sample_deg % 2 == 1 || block_deg % 4 != 0 {
                    return;
                }
            }
            let final_df = if remaining == 0 && cell < md * d && cell % d != 0 {
                dfprod * double_factorial_odd(sample_deg.saturating_sub(1))
            } else {
                dfprod
            };
            if total > 0 && total % 2 == 0 && row_deg.iter().all(|&r| r % 2 == 0) {
                let moment = (lambda / d as f64).powi((total / 2) as i32) * final_df;
                *acc += moment * moment;
            }
            return;
        }
        let sample = cell / d;
        let row = cell % d;
        let last_in_sample = row == d - 1;
        let last_in_block = last_in_sample && (sample + 1) % m == 0;
        for e in 0..=remaining {
            let sd = sample_deg + e;
            let bd = block_deg + e;
            if last_in_sample && sd % 2 == 1 {
                continue; // per-sample degree must be even
            }
            if last_in_block && bd % 4 != 0 {
                continue; // per-block degree must be divisible by 4
            }
            row_deg[row] += e;
            let (next_sd, next_bd, next_df) = if last_in_sample {
                (
                    0,
                    if last_in_block { 0 } else { bd },
                    dfprod * double_factorial_odd(sd.saturating_sub(1)),
                )
            } else {
                (sd, bd, dfprod)
            };
            rec(
                cell + 1,
                remaining - e,
                next_sd,
                next_bd,
                row_deg,
                lambda,
                d,
                m,
                md,
                next_df,
                total + e,
                acc,
            );
            row_deg[row] -= e;
        }
    }

    let mut row_deg = vec![0u32; d];
    rec(
        0, t, 0, 0, &mut row_deg, lambda, d, m, md, 1.0, 0, &mut acc,
    );
    Ok(acc)
}
