use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

/// A monomial in variables indexed 0..d+k, stored as sorted sparse
/// (variable, exponent) pairs. Variables 0..d are the sphere variables u_i
/// (or f_i for regression programs); variables d..d+k are the bucket
/// indicators b_j.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pairs: Vec<(usize, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(index: usize) -> Self {
        Self {
            pairs: vec![(index, 1)],
        }
    }

    pub fn from_pairs(mut pairs: Vec<(usize, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            if let Some(last) = merged.last_mut() {
                if last.0 == v {
                    last.1 += e;
                    continue;
                }
            }
            merged.push((v, e));
        }
        Self { pairs: merged }
    }

    pub fn degree(&self) -> u32 {
        self.pairs.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, u32)] {
        &self.pairs
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        Monomial::from_pairs(pairs)
    }

    /// Evaluates the monomial at a point (used by test oracles).
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(v, e)| point[v].powi(e as i32))
            .product()
    }

    /// Renders with `d` leading sphere variables named u and the remainder
    /// named b, one-indexed.
    pub fn display(&self, d: usize) -> String {
        if self.is_one() {
            return "1".to_string();
        }
        self.pairs
            .iter()
            .map(|&(v, e)| {
                let name = if v < d {
                    format!("u{}", v + 1)
                } else {
                    format!("b{}", v - d + 1)
                };
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let s = self
            .pairs
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    format!("x{v}")
                } else {
                    format!("x{v}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*");
        write!(f, "{s}")
    }
}

/// A polynomial with real coefficients over the (u, b) variables. Zero
/// coefficients are never stored; term order is the monomial order, which
/// keeps compilation deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(index: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(index), 1.0);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(t, &c)| (t.mul(m), c))
                .collect(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    /// sum_i u_i^2 - 1 over variables 0..d.
    pub fn sphere(d: usize) -> Polynomial {
        let mut p = Polynomial::constant(-1.0);
        for i in 0..d {
            p.add_term(Monomial::from_pairs(vec![(i, 2)]), 1.0);
        }
        p
    }

    /// b^2 - b for the given variable index.
    pub fn idempotence(var: usize) -> Polynomial {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::from_pairs(vec![(var, 2)]), 1.0);
        p.add_term(Monomial::var(var), -1.0);
        p
    }

    /// The quadratic form sum_{ij} M_ij x_i x_j over variables
    /// offset..offset+n.
    pub fn quadratic_form(m: &nalgebra::DMatrix<f64>, offset: usize) -> Polynomial {
        let n = m.nrows();
        let mut p = Polynomial::zero();
        for i in 0..n {
            for j in i..n {
                let c = if i == j {
                    m[(i, i)]
                } else {
                    m[(i, j)] + m[(j, i)]
                };
                p.add_term(Monomial::from_pairs(vec![(offset + i, 1), (offset + j, 1)]), c);
            }
        }
        p
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in self.terms() {
            for (m2, c2) in rhs.terms() {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}
