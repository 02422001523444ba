use crate::dataset::Dataset;
use crate::spec::SamplerError;
use nalgebra::DMatrix;

/// Per-bucket raw second-moment matrices of the truncated samples.
#[derive(Debug, Clone)]
pub struct BucketSummary {
    /// Z_i = (1/m) sum_{j in B_i} v~_j v~_j^T, symmetric PSD.
    pub z: Vec<DMatrix<f64>>,
    pub k: usize,
    /// Bucket size m = floor(n / k); trailing remainder samples are dropped.
    pub m: usize,
    /// Truncation radius used (may be infinite).
    pub alpha: f64,
}

/// Zeroes every row with Euclidean norm above alpha; n and d are unchanged.
pub fn truncate_samples(data: &Dataset, alpha: f64) -> Dataset {
    let mut out = data.clone();
    for r in 0..out.n() {
        let norm = out.samples.row(r).norm();
        if norm > alpha {
            out.samples.row_mut(r).fill(0.0);
        }
    }
    out
}

/// Splits the first k * floor(n/k) samples into k consecutive buckets and
/// forms per-bucket second moments of the alpha-truncated rows.
pub fn make_buckets(data: &Dataset, k: usize, alpha: f64) -> Result<BucketSummary, SamplerError> {
    let n = data.n();
    if k == 0 || k > n {
        return Err(SamplerError::TooManyBuckets { k, n });
    }
    let truncated = truncate_samples(data, alpha);
    let d = truncated.d();
    let m = n / k;
    let mut z = Vec::with_capacity(k);
    for b in 0..k {
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for j in b * m..(b + 1) * m {
            let row = truncated.samples.row(j);
            // acc += v v^T
            for p in 0..d {
                let vp = row[p];
                for q in p..d {
                    acc[(p, q)] += vp * row[q];
                }
            }
        }
        for p in 0..d {
            for q in p..d {
                acc[(p, q)] /= m as f64;
                acc[(q, p)] = acc[(p, q)];
            }
        }
        z.push(acc);
    }
    Ok(BucketSummary { z, k, m, alpha })
}

impl BucketSummary {
    /// Mean of the Z_i, the second moment of the retained truncated samples.
    pub fn mean(&self) -> DMatrix<f64> {
        let d = self.z[0].nrows();
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for zi in &self.z {
            acc += zi;
        }
        acc / self.k as f64
    }
}
