//! Mean estimation in general norms from bucket means.
//!
//! A point is (r, p)-central for bucket means Z_1..Z_k when in every dual
//! unit-ball direction at most a p-fraction of the Z_i sit more than r away.
//! Membership is decided by enumerating small subsets and testing emptiness
//! of the witness sets S_T with the ellipsoid method over the dual ball; a
//! second, outer ellipsoid searches the (convex) central set itself; the
//! estimator binary-searches the radius.

mod ellipsoid;
mod oracle;

pub use ellipsoid::{ellipsoid_search, Query};
pub use oracle::{BuiltinNorm, Separation, SeparationOracle};

use ht_sampler::Dataset;
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeanError {
    #[error("k = {k} exceeds n = {n}")]
    TooManyBuckets { k: usize, n: usize },
    #[error("k = {0} exceeds the subset-enumeration guard (24)")]
    EnumerationGuard(usize),
    #[error("delta must lie in (2^-n, 1)")]
    BadDelta,
    #[error("no central point found at any probed radius")]
    NoCentralPoint,
}

/// Query describing a centrality test instance.
#[derive(Debug, Clone)]
pub struct CentralQuery {
    pub z: Vec<DVector<f64>>,
    pub r: f64,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub enum CentralVerdict {
    Central,
    /// A dual-ball direction and bucket set witnessing non-centrality.
    Witness { u: DVector<f64>, set: Vec<usize> },
}

const ENUM_GUARD: usize = 24;

/// Per-bucket sample means over contiguous buckets.
pub fn bucket_means(data: &Dataset, k: usize) -> Result<Vec<DVector<f64>>, MeanError> {
    let n = data.n();
    if k == 0 || k > n {
        return Err(MeanError::TooManyBuckets { k, n });
    }
    let m = n / k;
    let d = data.d();
    let mut out = Vec::with_capacity(k);
    for b in 0..k {
        let mut acc = DVector::<f64>::zeros(d);
        for j in b * m..(b + 1) * m {
            acc += data.samples.row(j).transpose();
        }
        out.push(acc / m as f64);
    }
    Ok(out)
}

/// Emptiness of S_T = {u in B* : <Z_i - x, u> >= r for all i in T}, decided
/// by the ellipsoid method over the dual ball. Returns a witness when
/// nonempty.
fn witness_direction(
    z: &[DVector<f64>],
    x: &DVector<f64>,
    r: f64,
    set: &[usize],
    oracle: &dyn SeparationOracle,
) -> Option<DVector<f64>> {
    let d = x.len();
    let radius = oracle.radius_bound();
    // Tolerance tied to the instance scale: directions achieving the margin
    // only to within `slack` are treated as boundary cases consistently for
    // every caller.
    let scale: f64 = set
        .iter()
        .map(|&i| (&z[i] - x).norm())
        .fold(r.abs().max(1.0), f64::max);
    let min_ball = 1e-9 * scale.max(1.0) / (radius.max(1.0));
    ellipsoid_search(
        DVector::zeros(d),
        radius * 1.001,
        min_ball,
        |u: &DVector<f64>| {
            for &i in set {
                let gap = (&z[i] - x).dot(u);
                if gap < r {
                    let normal = -(&z[i] - x);
                    let offset = -r;
                    return Query::Cut {
                        normal: normal.clone(),
                        offset,
                    };
                }
            }
            match oracle.separate(u) {
                Separation::Inside => Query::Accept,
                Separation::Violated { normal, offset } => Query::Cut { normal, offset },
            }
        },
    )
}

fn subsets_of_size(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, k: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        let needed = size - current.len();
        for i in start..=k.saturating_sub(needed) {
            current.push(i);
            rec(i + 1, k, size, current, out);
            current.pop();
        }
    }
    rec(0, k, size, &mut current, &mut out);
    out
}

/// Central iff S_T is empty for every subset T of size floor(pk) + 1.
pub fn is_central(
    q: &CentralQuery,
    x: &DVector<f64>,
    oracle: &dyn SeparationOracle,
) -> Result<CentralVerdict, MeanError> {
    let k = q.z.len();
    if k > ENUM_GUARD {
        return Err(MeanError::EnumerationGuard(k));
    }
    let t_size = ((q.p * k as f64).floor() as usize + 1).min(k);
    // Pre-filter: a bucket that cannot be violated alone cannot appear in a
    // violated set.
    let mut feasible = Vec::new();
    for i in 0..k {
        if witness_direction(&q.z, x, q.r, &[i], oracle).is_some() {
            feasible.push(i);
        }
    }
    if feasible.len() < t_size {
        return Ok(CentralVerdict::Central);
    }
    for combo in subsets_of_size(feasible.len(), t_size) {
        let set: Vec<usize> = combo.iter().map(|&j| feasible[j]).collect();
        if let Some(u) = witness_direction(&q.z, x, q.r, &set, oracle) {
            return Ok(CentralVerdict::Witness { u, set });
        }
    }
    Ok(CentralVerdict::Central)
}

/// GEN-TST value: the largest number of buckets that some dual direction
/// pushes at least r away from x. Descending subset-size enumeration with
/// early exit; x is (r, p)-central iff the value is at most pk.
pub fn gen_tst_value(
    z: &[DVector<f64>],
    x: &DVector<f64>,
    r: f64,
    oracle: &dyn SeparationOracle,
) -> Result<usize, MeanError> {
    let k = z.len();
    if k > ENUM_GUARD {
        return Err(MeanError::EnumerationGuard(k));
    }
    let mut feasible = Vec::new();
    for i in 0..k {
        if witness_direction(z, x, r, &[i], oracle).is_some() {
            feasible.push(i);
        }
    }
    for size in (1..=feasible.len()).rev() {
        for combo in subsets_of_size(feasible.len(), size) {
            let set: Vec<usize> = combo.iter().map(|&j| feasible[j]).collect();
            if witness_direction(z, x, r, &set, oracle).is_some() {
                return Ok(size);
            }
        }
    }
    Ok(0)
}

/// Ellipsoid search over the central set. The initial ball contains every
/// central point (any central point lies in the smallest ball containing the
/// Z_i). Returns None when the volume bound certifies that no r/100-ball of
/// central points exists.
pub fn find_central_point(
    q: &CentralQuery,
    oracle: &dyn SeparationOracle,
) -> Result<Option<DVector<f64>>, MeanError> {
    let k = q.z.len();
    if k > ENUM_GUARD {
        return Err(MeanError::EnumerationGuard(k));
    }
    let d = q.z[0].len();
    let mut centroid = DVector::<f64>::zeros(d);
    for zi in &q.z {
        centroid += zi;
    }
    centroid /= k as f64;
    let max_dist = q
        .z
        .iter()
        .map(|zi| (zi - &centroid).norm())
        .fold(0.0f64, f64::max);
    let radius = 2.0 * max_dist + q.r + 1e-9;
    let min_ball = (q.r / 100.0).max(1e-9 * (1.0 + max_dist));

    let mut guard_err = None;
    let found = ellipsoid_search(centroid, radius, min_ball, |x: &DVector<f64>| {
        match is_central(q, x, oracle) {
            Ok(CentralVerdict::Central) => Query::Accept,
            Ok(CentralVerdict::Witness { u, set }) => {
                // Central points y satisfy <u, y> >= beta where beta is the
                // (|T|)-th largest <Z_i, u> minus r; the witness set shows x
                // violates it.
                let mut vals: Vec<f64> = q.z.iter().map(|zi| zi.dot(&u)).collect();
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let beta = vals[set.len() - 1] - q.r;
                Query::Cut {
                    normal: -u,
                    offset: -beta,
                }
            }
            Err(e) => {
                guard_err = Some(e);
                Query::Accept // unwind via the error below
            }
        }
    });
    if let Some(e) = guard_err {
        return Err(e);
    }
    Ok(found)
}

#[derive(Debug, Clone)]
pub struct MeanConfig {
    /// k = ceil(c_buckets * ln(1/delta)).
    pub c_buckets: f64,
    pub p: f64,
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self {
            c_buckets: 3.0,
            p: 0.1,
        }
    }
}

/// Median-of-means estimator for the mean in the oracle's norm: bucket the
/// samples, then binary-search (factor 2) the smallest radius at which a
/// central point exists.
pub fn estimate_mean_norm(
    data: &Dataset,
    delta: f64,
    oracle: &dyn SeparationOracle,
    cfg: &MeanConfig,
) -> Result<DVector<f64>, MeanError> {
    let n = data.n();
    if !(delta > (2.0f64).powi(-(n as i32)) && delta < 1.0) {
        return Err(MeanError::BadDelta);
    }
    let k = ((cfg.c_buckets * (1.0 / delta).ln()).ceil() as usize)
        .max(1)
        .min(n);
    let z = bucket_means(data, k)?;
    let d = data.d();

    let max_pair = {
        let mut m = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                m = m.max((&z[i] - &z[j]).norm());
            }
        }
        m
    };
    if max_pair == 0.0 {
        return Ok(z[0].clone());
    }

    let hi = (d as f64) * max_pair;
    let mut r = hi;
    let mut best: Option<DVector<f64>> = None;
    loop {
        let q = CentralQuery {
            z: z.clone(),
            r,
            p: cfg.p,
        };
        match find_central_point(&q, oracle)? {
            Some(x) => {
                best = Some(x);
                r /= 2.0;
            }
            None => break,
        }
        if r < hi * 1e-6 {
            break;
        }
    }
    best.ok_or(MeanError::NoCentralPoint)
}
