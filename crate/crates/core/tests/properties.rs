mod oracle;

use lasserre::certify::{
    c_threshold, epsilon_certificate, interpolants, offset_polynomial, sc_polynomial, square_equalities,
};
use lasserre::polyring::{basis, binomial, Exponent, RatPoly, Rational};
use num_traits::{One, Signed, Zero};
use oracle::{negative_witness, nonnegative_on_reals, Uni};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn rational() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=5).prop_map(|(a, b)| rat(a, b))
}

fn poly(n: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = RatPoly> {
    let term = (prop::collection::vec(0..=max_deg, n), rational());
    prop::collection::vec(term, 0..=max_terms).prop_map(move |terms| {
        RatPoly::from_terms(
            n,
            terms
                .into_iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= max_deg)
                .map(|(e, c)| (Exponent::new(e), c)),
        )
    })
}

fn float_poly(n: usize) -> impl Strategy<Value = RatPoly> {
    let term = (prop::collection::vec(0u32..=6, n), -10i64..=10, 1i64..=4);
    prop::collection::vec(term, 1..=6).prop_map(move |terms| {
        RatPoly::from_terms(
            n,
            terms
                .into_iter()
                .filter(|(e, _, _)| e.iter().sum::<u32>() <= 6)
                .map(|(e, a, b)| (Exponent::new(e), rat(a, b))),
        )
    })
}

fn triple() -> impl Strategy<Value = (usize, RatPoly, RatPoly, RatPoly)> {
    (1usize..=3).prop_flat_map(|n| (Just(n), poly(n, 6, 5), poly(n, 6, 5), poly(n, 6, 5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms((_, p, q, r) in triple()) {
        prop_assert_eq!(&(&p + &q) + &r, &p + &(&q + &r));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn eval_is_a_homomorphism(
        (n, p, q, _) in triple(),
        raw in prop::collection::vec(rational(), 3),
    ) {
        let u = &raw[..n];
        let pu = p.eval(u).unwrap();
        let qu = q.eval(u).unwrap();
        prop_assert_eq!((&p * &q).eval(u).unwrap(), &pu * &qu);
        prop_assert_eq!((&p + &q).eval(u).unwrap(), pu + qu);
    }

    #[test]
    fn gradient_matches_central_differences(
        (n, p) in (1usize..=3).prop_flat_map(|n| (Just(n), float_poly(n))),
        raw in prop::collection::vec(-1.5f64..1.5, 3),
    ) {
        let u = &raw[..n];
        let f = p.to_float();
        let h = 1e-5;
        for (i, g) in p.gradient().iter().enumerate() {
            let exact = g.to_float().eval(u).unwrap();
            let mut up = u.to_vec();
            let mut down = u.to_vec();
            up[i] += h;
            down[i] -= h;
            let fd = (f.eval(&up).unwrap() - f.eval(&down).unwrap()) / (2.0 * h);
            let scale = exact.abs().max(1.0);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{} vs {}", fd, exact);
        }
    }

    #[test]
    fn basis_is_complete_and_ordered(n in 1usize..=4, t in 0u32..=6) {
        let b = basis(n, t);
        prop_assert_eq!(b.len(), binomial(n + t as usize, n));
        for w in b.exponents().windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        prop_assert!(b.iter().all(|e| e.total() <= t));
    }

    #[test]
    fn epsilon_identity(
        (p, q) in (1usize..=2).prop_flat_map(|n| (poly(n, 3, 4), poly(n, 3, 4))),
        ell in 1u32..=2,
        eps in prop::sample::select(vec![rat(1, 1), rat(1, 2), rat(1, 7), rat(3, 1)]),
    ) {
        let c = c_threshold(ell).unwrap();
        let s = epsilon_certificate(&p, &q, ell, &c, &eps).unwrap();
        let lhs = &p + &RatPoly::constant(p.n(), eps.clone());
        prop_assert_eq!(&lhs, &(&s.phi + &s.theta()));
        if let Some(sq) = &s.sc_squares {
            prop_assert!(sq.squares().iter().all(|(w, _)| !w.is_negative()));
            prop_assert_eq!(sq.expand(), s.sc_part.clone());
        }
    }

    #[test]
    fn interpolants_are_kronecker(
        (n, raw) in (1usize..=3).prop_flat_map(|n| (Just(n), prop::collection::vec(prop::collection::vec(-3i64..=3, n), 1..=6))),
    ) {
        let mut points: Vec<Vec<Rational>> = Vec::new();
        for v in raw {
            let p: Vec<Rational> = v.into_iter().map(|a| rat(a, 1)).collect();
            if !points.contains(&p) {
                points.push(p);
            }
        }
        let phis = interpolants(&points).unwrap();
        prop_assert_eq!(phis.len(), points.len());
        for (i, phi) in phis.iter().enumerate() {
            prop_assert_eq!(phi.n(), n);
            for (j, u) in points.iter().enumerate() {
                let expected = if i == j { Rational::one() } else { Rational::zero() };
                prop_assert_eq!(phi.eval(u).unwrap(), expected);
            }
        }
    }

    #[test]
    fn offset_vanishes_on_points(
        raw in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 1..=6),
        f in poly(2, 3, 4),
    ) {
        let mut points: Vec<Vec<Rational>> = Vec::new();
        for v in raw {
            let p: Vec<Rational> = v.into_iter().map(|a| rat(a, 1)).collect();
            if !points.contains(&p) {
                points.push(p);
            }
        }
        let f_min = points.iter().map(|u| f.eval(u).unwrap()).min().unwrap();
        let off = offset_polynomial(&points, &f, &f_min, &[]).unwrap();
        for u in &points {
            prop_assert!(off.hat_f.eval(u).unwrap().is_zero());
        }
        prop_assert_eq!(&off.hat_f + &off.a, &f - &RatPoly::constant(2, f_min));
    }

    #[test]
    fn squared_equalities_vanish_exactly_on_the_variety(
        hs in prop::collection::vec(poly(2, 3, 3), 1..=3),
        raw in prop::collection::vec(rational(), 2),
    ) {
        let sq = square_equalities(&hs).unwrap();
        let v = sq.eval(&raw).unwrap();
        prop_assert!(!v.is_negative());
        let all_zero = hs.iter().all(|h| h.eval(&raw).unwrap().is_zero());
        prop_assert_eq!(v.is_zero(), all_zero);
    }
}

#[test]
fn squared_equalities_on_the_variety_are_zero() {
    let h = vec![
        lasserre::polyring::parse_polynomial("x1^2 - x2", 2).unwrap(),
        lasserre::polyring::parse_polynomial("x1*x2 - 8", 2).unwrap(),
    ];
    let sq = square_equalities(&h).unwrap();
    assert!(sq.eval(&[rat(2, 1), rat(4, 1)]).unwrap().is_zero());
}

#[test]
fn sc_threshold_is_sharp() {
    for ell in 1..=3 {
        let c0 = c_threshold(ell).unwrap();
        for factor in [rat(1, 1), rat(2, 1), rat(11, 10)] {
            let s = Uni::from_poly(&sc_polynomial(ell, &(&c0 * &factor)));
            assert!(nonnegative_on_reals(&s), "ell={ell}, c = {factor}·c0");
        }
        for delta in [rat(1, 10), rat(1, 2)] {
            let c = &c0 * &(Rational::one() - &delta);
            let s = Uni::from_poly(&sc_polynomial(ell, &c));
            assert!(!nonnegative_on_reals(&s), "ell={ell}, delta={delta}");
            let t = negative_witness(&s).expect("a negative value");
            assert!(s.eval(&t).is_negative());
        }
    }
}

#[test]
fn oracle_sanity() {
    // (t - 1)^2 (t + 2): odd root at -2.
    let p = Uni(vec![rat(2, 1), rat(-3, 1), rat(0, 1), rat(1, 1)]);
    assert!(!nonnegative_on_reals(&p));
    // (t - 1)^2 (t^2 + 1)
    let q = Uni(vec![rat(1, 1), rat(-2, 1), rat(2, 1), rat(-2, 1), rat(1, 1)]);
    assert!(nonnegative_on_reals(&q));
    assert!(negative_witness(&q).is_none());
    // 1 + t + t^2/8 has two real roots.
    let r = Uni(vec![rat(1, 1), rat(1, 1), rat(1, 8)]);
    assert_eq!(r.real_root_count(), 2);
    assert!(r.eval(&negative_witness(&r).unwrap()).is_negative());
}

#[test]
fn squared_gradient_matches_printed_form() {
    let parse = |s: &str| lasserre::polyring::parse_polynomial(s, 2).unwrap();
    let f = parse("x1^2*x2^2*x1^2 + x1^2*x2^2*x2^2 - x1^2*x2^2");
    let prob = lasserre::certify::gradient_problem(&f, true);
    let a = parse("2*x1^2 + x2^2 - 1");
    let b = parse("x1^2 + 2*x2^2 - 1");
    let expected = &parse("4*x1^2*x2^2") * &(&(&parse("x2^2") * &a.square()) + &(&parse("x1^2") * &b.square()));
    assert_eq!(prob.equalities(), &[expected]);
    assert_eq!(prob.square_roots(0).map(<[_]>::len), Some(2));
}
