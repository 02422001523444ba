use crate::poly::Monomial;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    /// {1} ∪ {u_i} ∪ {b_j} ∪ {u_i u_l, i <= l}. The default: the moment
    /// matrix stays (1 + d + k + d(d+1)/2)^2 instead of quadratic in (d+k)^2.
    Partial,
    /// All monomials of degree <= 2 in (u, b).
    Full,
}

/// Ordered, duplicate-free monomial basis for degree-4 pseudoexpectations.
/// Entry 0 is the constant monomial.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub d: usize,
    pub k: usize,
    pub mode: BasisMode,
    entries: Vec<Monomial>,
    index: BTreeMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn build(d: usize, k: usize, mode: BasisMode) -> Self {
        let mut entries = vec![Monomial::one()];
        for i in 0..d {
            entries.push(Monomial::var(i));
        }
        for j in 0..k {
            entries.push(Monomial::var(d + j));
        }
        match mode {
            BasisMode::Partial => {
                for i in 0..d {
                    for l in i..d {
                        entries.push(Monomial::from_pairs(vec![(i, 1), (l, 1)]));
                    }
                }
            }
            BasisMode::Full => {
                let n = d + k;
                for i in 0..n {
                    for l in i..n {
                        entries.push(Monomial::from_pairs(vec![(i, 1), (l, 1)]));
                    }
                }
            }
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Self {
            d,
            k,
            mode,
            entries,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}
