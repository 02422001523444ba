use crate::dataset::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, StandardNormal, StudentT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("product_t requires nu > 8 (eight finite moments), got {0}")]
    BadNu(f64),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("point mass vector has dimension {0}, spec says {1}")]
    PointMassDim(usize, usize),
    #[error("linear transform must be {d}x{d}, got {r}x{c}")]
    TransformShape { d: usize, r: usize, c: usize },
    #[error("linear transform entries must be finite")]
    TransformNotFinite,
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("k = {k} exceeds n = {n}: too many buckets")]
    TooManyBuckets { k: usize, n: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The built-in generator family. Non-symmetric generators are
/// pair-differenced, (X - X')/sqrt(2), so every spec is mean-zero; this
/// preserves the covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    /// Product of standard normals.
    Gaussian,
    /// Product of Student t(nu) coordinates, nu > 8.
    ProductT { nu: f64 },
    /// Product of Rademacher signs.
    ProductRademacher,
    /// Product of pair-differenced LogNormal(0, 1) coordinates.
    LognormalProduct,
    /// Degenerate distribution at a fixed vector.
    PointMass(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct DistSpec {
    pub kind: DistKind,
    pub d: usize,
    /// Optional linear transform A; the target covariance is A Cov0 A^T.
    pub transform: Option<DMatrix<f64>>,
}

impl DistSpec {
    pub fn new(kind: DistKind, d: usize) -> Result<Self, SamplerError> {
        Self::with_transform(kind, d, None)
    }

    pub fn with_transform(
        kind: DistKind,
        d: usize,
        transform: Option<DMatrix<f64>>,
    ) -> Result<Self, SamplerError> {
        if d == 0 {
            return Err(SamplerError::ZeroDim);
        }
        if let DistKind::ProductT { nu } = kind {
            if !(nu > 8.0) {
                return Err(SamplerError::BadNu(nu));
            }
        }
        if let DistKind::PointMass(v) = &kind {
            if v.len() != d {
                return Err(SamplerError::PointMassDim(v.len(), d));
            }
        }
        if let Some(a) = &transform {
            if a.nrows() != d || a.ncols() != d {
                return Err(SamplerError::TransformShape {
                    d,
                    r: a.nrows(),
                    c: a.ncols(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(SamplerError::TransformNotFinite);
            }
        }
        Ok(Self { kind, d, transform })
    }

    /// Per-coordinate variance of the base (untransformed) generator.
    pub fn base_variance(&self) -> f64 {
        match &self.kind {
            DistKind::Gaussian => 1.0,
            DistKind::ProductT { nu } => nu / (nu - 2.0),
            DistKind::ProductRademacher => 1.0,
            // Var((X - X')/sqrt(2)) = Var(X) for LogNormal(0, 1).
            DistKind::LognormalProduct => {
                let e = std::f64::consts::E;
                (e - 1.0) * e
            }
            DistKind::PointMass(_) => 0.0,
        }
    }

    /// Derived target covariance A Cov0 A^T (Cov0 = base_variance * I).
    pub fn sigma(&self) -> DMatrix<f64> {
        let base = DMatrix::identity(self.d, self.d) * self.base_variance();
        match &self.transform {
            Some(a) => a * base * a.transpose(),
            None => base,
        }
    }

    pub fn trace_sigma(&self) -> f64 {
        self.sigma().trace()
    }

    pub fn opnorm_sigma(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.sigma());
        eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// Analytic eighth-to-second moment ratio L with
    /// E<X,u>^8 <= L^2 (E<X,u>^2)^4 along coordinate axes; L is preserved by
    /// linear transforms. Computed from univariate moment formulas.
    pub fn l_constant(&self) -> f64 {
        let l2 = match &self.kind {
            DistKind::Gaussian => 105.0,
            DistKind::ProductT { nu } => {
                // E T^{2k} = nu^k (2k-1)!! / prod_{i<=k} (nu - 2i)
                let m2 = nu / (nu - 2.0);
                let m8 = nu.powi(4) * 105.0
                    / ((nu - 2.0) * (nu - 4.0) * (nu - 6.0) * (nu - 8.0));
                m8 / m2.powi(4)
            }
            DistKind::ProductRademacher => 1.0,
            DistKind::LognormalProduct => {
                let (m2, m8) = lognormal_diff_moments();
                m8 / m2.powi(4)
            }
            DistKind::PointMass(_) => 1.0,
        };
        l2.sqrt()
    }
}

/// Even moments (2nd, 8th) of (X - X')/sqrt(2) for X ~ LogNormal(0,1),
/// from the raw moments E X^k = e^{k^2/2} and the binomial expansion.
fn lognormal_diff_moments() -> (f64, f64) {
    let raw = |k: i32| ((k * k) as f64 / 2.0).exp();
    let binom = |n: i64, k: i64| -> f64 {
        let mut v = 1.0;
        for i in 0..k {
            v = v * ((n - i) as f64) / ((i + 1) as f64);
        }
        v
    };
    let centered = |p: i32| -> f64 {
        // E (X - X')^p
        let mut acc = 0.0;
        for j in 0..=p {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom(p as i64, j as i64) * raw(j) * raw(p - j);
        }
        acc
    };
    (centered(2) / 2.0, centered(8) / 16.0)
}

/// Draws n i.i.d. mean-zero rows; deterministic given (spec, n, seed).
pub fn sample_dist(spec: &DistSpec, n: usize, seed: u64) -> Result<Dataset, SamplerError> {
    if n == 0 {
        return Err(SamplerError::ZeroSamples);
    }
    let d = spec.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = DMatrix::<f64>::zeros(n, d);
    match &spec.kind {
        DistKind::Gaussian => {
            for r in 0..n {
                for c in 0..d {
                    samples[(r, c)] = StandardNormal.sample(&mut rng);
                }
            }
        }
        DistKind::ProductT { nu } => {
            let t = StudentT::new(*nu).expect("validated nu");
            for r in 0..n {
                for c in 0..d {
                    samples[(r, c)] = t.sample(&mut rng);
                }
            }
        }
        DistKind::ProductRademacher => {
            for r in 0..n {
                for c in 0..d {
                    let bit: bool = rand::Rng::gen(&mut rng);
                    samples[(r, c)] = if bit { 1.0 } else { -1.0 };
                }
            }
        }
        DistKind::LognormalProduct => {
            let ln = LogNormal::new(0.0, 1.0).expect("valid parameters");
            let inv_sqrt2 = 0.5f64.sqrt();
            for r in 0..n {
                for c in 0..d {
                    let a: f64 = ln.sample(&mut rng);
                    let b: f64 = ln.sample(&mut rng);
                    samples[(r, c)] = (a - b) * inv_sqrt2;
                }
            }
        }
        DistKind::PointMass(v) => {
            for r in 0..n {
                for c in 0..d {
                    samples[(r, c)] = v[c];
                }
            }
        }
    }
    if let Some(a) = &spec.transform {
        let at = a.transpose();
        samples *= at;
    }
    Ok(Dataset {
        samples,
        seed,
        spec: Some(spec.clone()),
    })
}
