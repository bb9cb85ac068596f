use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use twisted_core::annulus::{Endomorphism, LaurentElement, Space};
use twisted_core::config::Config;
use twisted_core::io;
use twisted_core::qcomb::qbinom;
use twisted_core::twisted::{TwistedOperator, XiBasis, XiPolynomial};
use twisted_core::{LogNorm, PadicScalar};

fn space() -> Space {
    Config::default().space().unwrap()
}

fn eta() -> LogNorm {
    Config::default().eta().unwrap()
}

// p^e * u with u a small integer; e may be negative
fn scalar(s: Space, (u, e): (i64, i64)) -> PadicScalar {
    &s.ctx.int(u) * &s.ctx.p_power(e)
}

fn arb_term() -> impl Strategy<Value = (i64, i64)> {
    (-30i64..=30, 0i64..=3)
}

fn arb_series(lo: i64, hi: i64, len: usize) -> impl Strategy<Value = Vec<(i64, (i64, i64))>> {
    prop::collection::vec((lo..=hi, arb_term()), 0..=len)
}

fn series(s: Space, terms: &[(i64, (i64, i64))]) -> LaurentElement {
    LaurentElement::from_terms(s, terms.iter().map(|&(n, t)| (n, scalar(s, t))), LogNorm::Zero)
}

fn dilation_shift(s: Space) -> Endomorphism {
    Endomorphism::new(s.ctx.int(26), s.ctx.int(25), s).unwrap()
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn from_rational(s: Space, r: &BigRational) -> PadicScalar {
    PadicScalar::from_ratio(s.ctx, r.numer(), r.denom()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_pascal_in_both_forms(q in -60i64..=60, n in 1u64..=12, k in 1u64..=12) {
        prop_assume!(k <= n);
        let s = space();
        let q = s.ctx.int(q);
        let left = qbinom(n, k, &q);
        let a = qbinom(n - 1, k - 1, &q);
        let b = qbinom(n - 1, k, &q);
        prop_assert_eq!(&left, &(&a + &(&q.pow(k) * &b)));
        prop_assert_eq!(&left, &(&(&q.pow(n - k) * &a) + &b));
    }

    #[test]
    fn scalar_arithmetic_matches_rationals(a in (-10_000i64..10_000, 1i64..500), b in (-10_000i64..10_000, 1i64..500)) {
        prop_assume!(a.1 % 5 != 0 && b.1 % 5 != 0);
        let s = space();
        let (ra, rb) = (rational(a.0, a.1), rational(b.0, b.1));
        let (pa, pb) = (from_rational(s, &ra), from_rational(s, &rb));
        prop_assert!((&pa + &pb).eq_at_precision(&from_rational(s, &(&ra + &rb))));
        prop_assert!((&pa - &pb).eq_at_precision(&from_rational(s, &(&ra - &rb))));
        prop_assert!((&pa * &pb).eq_at_precision(&from_rational(s, &(&ra * &rb))));
        if a.0 != 0 && a.0 % 5 != 0 {
            prop_assert!(pb.div(&pa).unwrap().eq_at_precision(&from_rational(s, &(&rb / &ra))));
        }
    }

    #[test]
    fn gauss_norm_is_ultrametric_and_submultiplicative(f in arb_series(-8, 8, 6), g in arb_series(-8, 8, 6)) {
        let s = space();
        let (f, g) = (series(s, &f), series(s, &g));
        prop_assert!((&f + &g).gauss_norm() <= f.gauss_norm().max(g.gauss_norm()));
        let fg = &f * &g;
        prop_assert!(fg.gauss_norm() <= f.gauss_norm().mul(g.gauss_norm()));
        // each boundary circle norm is multiplicative
        for rho in [s.params.outer_log, s.params.inner_log.unwrap()] {
            prop_assert_eq!(fg.circle_norm(rho), f.circle_norm(rho).mul(g.circle_norm(rho)));
        }
    }

    #[test]
    fn schauder_round_trip_is_an_isometry(coeffs in prop::collection::vec(arb_series(-4, 6, 3), 1..=10)) {
        let s = space();
        let coeffs: Vec<LaurentElement> = coeffs.iter().map(|c| series(s, c)).collect();
        let p = XiPolynomial::new(s, coeffs, XiBasis::Monomial, eta()).unwrap();
        let d = p.to_divided(&dilation_shift(s)).unwrap();
        prop_assert_eq!(d.eta_norm(), p.eta_norm());
        prop_assert!(d.to_monomial().eq_at_precision(&p));
    }

    #[test]
    fn composition_is_nested_application(
        phi in prop::collection::vec(arb_series(0, 3, 2), 1..=4),
        psi in prop::collection::vec(arb_series(0, 3, 2), 1..=4),
        z in arb_series(0, 8, 4),
    ) {
        let s = space();
        let sigma = dilation_shift(s);
        let op = |c: &Vec<Vec<(i64, (i64, i64))>>| {
            TwistedOperator::new(sigma.clone(), eta(), c.iter().map(|t| series(s, t)).collect(), LogNorm::Zero, 30).unwrap()
        };
        let (phi, psi, z) = (op(&phi), op(&psi), series(s, &z));
        let both = phi.compose(&psi).unwrap();
        let nested = phi.apply(&psi.apply(&z).unwrap()).unwrap();
        prop_assert!(both.apply(&z).unwrap().eq_at_precision(&nested));
        prop_assert!(both.norm() <= phi.norm().mul(psi.norm()));
    }

    #[test]
    fn series_documents_round_trip(terms in arb_series(-40, 40, 12), den in 1i64..=40, tail in prop::option::of(-90i64..=-10)) {
        prop_assume!(den % 5 != 0);
        let s = space();
        let inv = PadicScalar::from_ratio(s.ctx, &BigInt::from(1), &BigInt::from(den)).unwrap();
        let mut z = series(s, &terms).scale(&inv);
        if let Some(t) = tail {
            z = z.with_tail(LogNorm::from_log_int(t));
        }
        let text = io::to_json(&io::series_to_doc(&z));
        let back = io::series_from_doc(&serde_json::from_str(&text).unwrap(), s).unwrap();
        prop_assert_eq!(back, z);
    }
}
