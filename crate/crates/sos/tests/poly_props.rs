use ht_sos::{Monomial, Polynomial};
use proptest::prelude::*;

fn arb_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(
        (
            prop::collection::vec((0usize..4, 1u32..3), 0..3),
            -5.0f64..5.0,
        ),
        0..6,
    )
    .prop_map(|terms| {
        let mut p = Polynomial::zero();
        for (pairs, c) in terms {
            let m = Monomial::from_pairs(pairs);
            if m.degree() <= 2 {
                p.add_term(m, c);
            }
        }
        p
    })
}

proptest! {
    /// Multiplication agrees with pointwise evaluation.
    #[test]
    fn mul_matches_eval(a in arb_poly(), b in arb_poly(),
                        x in prop::collection::vec(-2.0f64..2.0, 4)) {
        let prod = &a * &b;
        let lhs = prod.eval(&x);
        let rhs = a.eval(&x) * b.eval(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs() + rhs.abs()));
    }

    /// Addition commutes and no zero-coefficient terms are stored.
    #[test]
    fn add_commutes_and_prunes(a in arb_poly(), b in arb_poly()) {
        let ab = &a + &b;
        let ba = &b + &a;
        prop_assert_eq!(&ab, &ba);
        for (_, c) in ab.terms() {
            prop_assert!(c != 0.0);
        }
        let diff = &ab - &ab;
        prop_assert_eq!(diff.n_terms(), 0);
    }

    /// Monomial products are canonical: sorted variables, merged exponents.
    #[test]
    fn monomial_product_canonical(p1 in prop::collection::vec((0usize..5, 1u32..3), 0..3),
                                  p2 in prop::collection::vec((0usize..5, 1u32..3), 0..3)) {
        let a = Monomial::from_pairs(p1);
        let b = Monomial::from_pairs(p2);
        let ab = a.mul(&b);
        prop_assert_eq!(ab.degree(), a.degree() + b.degree());
        let mut prev: Option<usize> = None;
        for &(v, e) in ab.pairs() {
            prop_assert!(e > 0);
            if let Some(pv) = prev {
                prop_assert!(v > pv);
            }
            prev = Some(v);
        }
        prop_assert_eq!(a.mul(&b), b.mul(&a));
    }
}
