use ht_sos::{
    compile_program, BasisMode, Monomial, MonomialBasis, Polynomial, Program, SolveOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoadblockError {
    #[error("lambda = {0} must lie in [0, 1) for the planted covariance to stay PSD")]
    BadLambda(f64),
    #[error("d and m must be positive")]
    ZeroSize,
    #[error("d = {0} exceeds the subset-enumeration guard (16)")]
    SubsetGuard(usize),
    #[error("sos error: {0}")]
    Sos(#[from] ht_sos::SosError),
    #[error("index space {0} exceeds the enumeration guard (1e7)")]
    EnumerationGuard(f64),
    #[error("|lambda| ||x||^2 = {0} must be at most 1")]
    MomentPrecondition(f64),
    #[error("degree {0} must be even")]
    OddDegree(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Null,
    Planted,
}

#[derive(Debug, Clone)]
pub struct BlockMixtureInstance {
    /// md x d sample matrix; rows im..(i+1)m form block i.
    pub y: DMatrix<f64>,
    pub label: Label,
    /// The spike and block signs when planted.
    pub hidden: Option<(DVector<f64>, Vec<i8>)>,
    pub lambda: f64,
    pub d: usize,
    pub m: usize,
    pub seed: u64,
}

impl BlockMixtureInstance {
    /// Empirical second moment of block i.
    pub fn block_second_moment(&self, i: usize) -> DMatrix<f64> {
        let d = self.d;
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for j in i * self.m..(i + 1) * self.m {
            let row = self.y.row(j);
            for p in 0..d {
                for q in p..d {
                    acc[(p, q)] += row[p] * row[q];
                }
            }
        }
        for p in 0..d {
            for q in p..d {
                acc[(p, q)] /= self.m as f64;
                acc[(q, p)] = acc[(p, q)];
            }
        }
        acc
    }
}

/// Draws an instance. Null: md i.i.d. standard Gaussian vectors. Planted:
/// x uniform on {+-1/sqrt(d)}^d, s_i uniform signs, block i drawn from
/// N(0, Id + s_i lambda x x^T).
pub fn gen_block_mixture(
    d: usize,
    m: usize,
    lambda: f64,
    case: Label,
    seed: u64,
) -> Result<BlockMixtureInstance, RoadblockError> {
    if d == 0 || m == 0 {
        return Err(RoadblockError::ZeroSize);
    }
    if case == Label::Planted && !(0.0..1.0).contains(&lambda) {
        return Err(RoadblockError::BadLambda(lambda));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DMatrix::<f64>::zeros(m * d, d);
    let hidden = match case {
        Label::Null => {
            for r in 0..m * d {
                for c in 0..d {
                    y[(r, c)] = StandardNormal.sample(&mut rng);
                }
            }
            None
        }
        Label::Planted => {
            let scale = 1.0 / (d as f64).sqrt();
            let x = DVector::from_fn(d, |_, _| {
                if rng.gen::<bool>() {
                    scale
                } else {
                    -scale
                }
            });
            let s: Vec<i8> = (0..d).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            for (i, &si) in s.iter().enumerate() {
                // N(0, Id + s lambda x x^T): scale the component along the
                // unit spike direction by sqrt(1 + s lambda).
                let factor = (1.0 + si as f64 * lambda).sqrt() - 1.0;
                for r in i * m..(i + 1) * m {
                    let mut g = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                    let along = g.dot(&x);
                    g += &x * (factor * along);
                    for c in 0..d {
                        y[(r, c)] = g[c];
                    }
                }
            }
            Some((x, s))
        }
    };
    Ok(BlockMixtureInstance {
        y,
        label: case,
        hidden,
        lambda,
        d,
        m,
        seed,
    })
}

/// Exponential-time test: planted iff some subset S of at least d/4 blocks
/// has lambda_max(sum_{i in S} (Sigma_i - Id)) > lambda |S| / 2.
pub fn subset_spectral_test(
    inst: &BlockMixtureInstance,
    lambda: f64,
) -> Result<Label, RoadblockError> {
    let d = inst.d;
    if d > 16 {
        return Err(RoadblockError::SubsetGuard(d));
    }
    let deviations: Vec<DMatrix<f64>> = (0..d)
        .map(|i| inst.block_second_moment(i) - DMatrix::identity(d, d))
        .collect();
    subset_spectral_test_from_deviations(&deviations, lambda)
}

/// The subset scan over explicit deviation matrices Sigma_i - Id.
pub fn subset_spectral_test_from_deviations(
    deviations: &[DMatrix<f64>],
    lambda: f64,
) -> Result<Label, RoadblockError> {
    let d = deviations.len();
    if d > 16 {
        return Err(RoadblockError::SubsetGuard(d));
    }
    let dim = deviations[0].nrows();
    let min_size = (d + 3) / 4; // |S| >= d/4
    for mask in 1u32..(1u32 << d) {
        let size = mask.count_ones() as usize;
        if size < min_size {
            continue;
        }
        let mut acc = DMatrix::<f64>::zeros(dim, dim);
        for (i, dev) in deviations.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc += dev;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(acc);
        let lmax = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if lmax > lambda * size as f64 / 2.0 {
            return Ok(Label::Planted);
        }
    }
    Ok(Label::Null)
}

/// Polynomial-time test: planted iff the relaxation value of
/// max pE[sum_i b_i <Sigma_i - Id, uu^T>] (b idempotent, u on the sphere)
/// reaches lambda d / 4.
pub fn sos_spike_test(
    inst: &BlockMixtureInstance,
    lambda: f64,
) -> Result<Label, RoadblockError> {
    let value = sos_spike_value(inst)?;
    Ok(if value >= lambda * inst.d as f64 / 4.0 {
        Label::Planted
    } else {
        Label::Null
    })
}

/// The relaxation value used by sos_spike_test.
pub fn sos_spike_value(inst: &BlockMixtureInstance) -> Result<f64, RoadblockError> {
    let d = inst.d;
    let k = d; // one indicator per block
    let basis = MonomialBasis::build(d, k, BasisMode::Partial);
    let mut objective = Polynomial::zero();
    let mut equalities = vec![Polynomial::sphere(d)];
    for i in 0..k {
        let b = d + i;
        equalities.push(Polynomial::idempotence(b));
        let dev = inst.block_second_moment(i) - DMatrix::identity(d, d);
        objective = &objective + &Polynomial::quadratic_form(&dev, 0).mul_monomial(&Monomial::var(b));
    }
    let solved = compile_program(
        &Program {
            objective,
            equalities,
            inequalities: vec![],
        },
        &basis,
    )?
    .solve(&SolveOptions {
        gap_tol: 1e-7,
        ..SolveOptions::default()
    })?;
    Ok(solved.value)
}
