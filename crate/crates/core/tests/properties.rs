use ncd_core::arrangement::Arrangement;
use ncd_core::construct::{build, ConstructionInput, Variant};
use ncd_core::geom::{ellipsoid, half_plane, hyperbola_region, HyperbolaVariant, Metadata, Orientation, Side};
use ncd_core::poly::{int, parse_rational, rat, Polynomial, Rational};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

const NV: usize = 3;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(small_rat(), n)
}

// up to six terms of degree at most `deg` in NV variables
fn poly(deg: u32) -> impl Strategy<Value = Polynomial> {
    let term = (prop::collection::vec(0..=deg, NV), -6i64..=6).prop_filter_map("degree", move |(e, c)| {
        (e.iter().sum::<u32>() <= deg).then_some((e, int(c)))
    });
    prop::collection::vec(term, 0..6).prop_map(|ts| Polynomial::from_terms(NV, ts).unwrap())
}

// unit lower times unit upper triangular: always invertible
fn invertible(n: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    (
        prop::collection::vec(-2i64..=2, n * n),
        prop::collection::vec(-2i64..=2, n * n),
    )
        .prop_map(move |(l, u)| {
            let lo = |i: usize, j: usize| {
                if i == j {
                    1
                } else if i > j {
                    l[i * n + j]
                } else {
                    0
                }
            };
            let up = |i: usize, j: usize| {
                if i == j {
                    1
                } else if i < j {
                    u[i * n + j]
                } else {
                    0
                }
            };
            (0..n)
                .map(|i| (0..n).map(|j| int((0..n).map(|k| lo(i, k) * up(k, j)).sum())).collect())
                .collect()
        })
}

fn apply(a: &[Vec<Rational>], b: &[Rational], x: &[Rational]) -> Vec<Rational> {
    a.iter()
        .zip(b)
        .map(|(r, bi)| r.iter().zip(x).map(|(p, q)| p * q).sum::<Rational>() + bi)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(p in poly(2), q in poly(2), r in poly(2)) {
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p + &q) + &r, &p + &(&q + &r));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
        prop_assert_eq!(&p * &Polynomial::constant(NV, int(1)), p.clone());
    }

    #[test]
    fn evaluation_is_a_homomorphism(p in poly(3), q in poly(3), x in point(NV)) {
        let (pv, qv) = (p.eval(&x).unwrap(), q.eval(&x).unwrap());
        prop_assert_eq!((&p + &q).eval(&x).unwrap(), &pv + &qv);
        prop_assert_eq!((&p * &q).eval(&x).unwrap(), &pv * &qv);
        prop_assert_eq!((-&p).eval(&x).unwrap(), -pv);
    }

    // central differences are exact for quadratics
    #[test]
    fn derivatives_match_differences(p in poly(2), x in point(NV), i in 0..NV, h in small_rat()) {
        prop_assume!(!h.is_zero());
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += &h;
        b[i] -= &h;
        let fd = (p.eval(&a).unwrap() - p.eval(&b).unwrap()) / (int(2) * &h);
        prop_assert_eq!(p.partial(i).unwrap().eval(&x).unwrap(), fd);
    }

    #[test]
    fn cubic_derivatives_match_float_differences(p in poly(3), x in prop::collection::vec(-2.0f64..2.0, NV), i in 0..NV) {
        let h = 1e-5;
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += h;
        b[i] -= h;
        let fd = (p.eval_f64(&a).unwrap() - p.eval_f64(&b).unwrap()) / (2.0 * h);
        let d = p.partial(i).unwrap().eval_f64(&x).unwrap();
        prop_assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "{} vs {}", d, fd);
    }

    #[test]
    fn affine_substitutions_compose(p in poly(2), a in invertible(NV), b in point(NV), c in invertible(NV), d in point(NV)) {
        let ac: Vec<Vec<Rational>> = (0..NV)
            .map(|i| (0..NV).map(|j| (0..NV).map(|k| &a[i][k] * &c[k][j]).sum()).collect())
            .collect();
        let adb = apply(&a, &b, &d);
        let lhs = p.affine_subst(&a, &b).unwrap().affine_subst(&c, &d).unwrap();
        prop_assert_eq!(lhs, p.affine_subst(&ac, &adb).unwrap());
    }

    #[test]
    fn embedding_commutes_with_evaluation(p in poly(2), y in point(5), perm in Just(vec![4usize, 0, 2]).prop_shuffle()) {
        let e = p.embed(5, &perm).unwrap();
        let x: Vec<Rational> = perm.iter().map(|&k| y[k].clone()).collect();
        prop_assert_eq!(e.eval(&y).unwrap(), p.eval(&x).unwrap());
    }

    #[test]
    fn text_round_trip(p in poly(3)) {
        prop_assert_eq!(Polynomial::parse(&p.to_string(), NV).unwrap(), p);
    }

    #[test]
    fn decimal_round_trip(n in -100000i64..100000, k in 0u32..5) {
        let q = rat(n, 10i64.pow(k));
        let s = format!("{}{}.{:0>w$}", if n < 0 { "-" } else { "" }, n.abs() / 10i64.pow(k), n.abs() % 10i64.pow(k), w = k as usize);
        prop_assert_eq!(parse_rational(&s).unwrap(), q);
    }

    #[test]
    fn hyperbola_branches_are_disjoint(a in small_rat(), b in small_rat(), c in small_rat(), left in any::<bool>(), s in small_rat()) {
        let (variant, c) = if left { (HyperbolaVariant::LeftOf, c.abs() + int(1)) } else { (HyperbolaVariant::RightOf, -c.abs() - int(1)) };
        let p = hyperbola_region(variant, a.clone(), b.clone(), c.clone()).unwrap();
        let Metadata::Hyperbola { branch_plus, branch_minus, .. } = &p.metadata else { unreachable!() };
        prop_assume!(!s.is_zero());
        // the point of (x1 - a)(x2 - b) = c over x1 = a + s
        let x = vec![&a + &s, &b + &c / &s];
        prop_assert!(p.f.eval(&x).unwrap().is_zero());
        let (plus, minus) = (branch_plus.contains(&x).unwrap(), branch_minus.contains(&x).unwrap());
        prop_assert!(plus != minus);
        prop_assert_eq!(plus, x[1] > b);
        prop_assert!(p.f.eval(&p.witness).unwrap().is_positive());
    }

    #[test]
    fn witnesses_are_inside(p1 in point(2), d in point(2), plus in any::<bool>(), c in point(3), r in prop::collection::vec(1i64..9, 3), hole in any::<bool>()) {
        prop_assume!(d.iter().any(|v| !v.is_zero()));
        let p2 = [&p1[0] + &d[0], &p1[1] + &d[1]];
        let side = if plus { Side::Plus } else { Side::Minus };
        let h = half_plane([p1[0].clone(), p1[1].clone()], p2, side).unwrap();
        prop_assert!(h.f.eval(&h.witness).unwrap().is_positive());
        let o = if hole { Orientation::Hole } else { Orientation::Body };
        let e = ellipsoid(c, r.into_iter().map(int).collect(), o).unwrap();
        prop_assert!(e.f.eval(&e.witness).unwrap().is_positive());
        prop_assert_eq!(e.reexpand().unwrap(), e.f.clone());
    }
}

fn labels(l: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, l - 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn membership_is_affine_equivariant(lab in labels(3), a in invertible(2), b in point(2), x in point(2)) {
        let t: Vec<Rational> = (0..3).map(int).collect();
        let arr = build(&ConstructionInput::new(t, lab, Variant::Mt2).unwrap()).unwrap();
        prop_assume!(arr.n == 2);
        let moved: Arrangement = arr.transformed(&a, &b).unwrap();
        prop_assert_eq!(moved.membership(&apply(&a, &b, &x)).unwrap(), arr.membership(&x).unwrap());
    }

    #[test]
    fn construction_is_deterministic(l in 2usize..6, mask in 0u32..32, mt3 in any::<bool>()) {
        let lab: Vec<u8> = (0..l - 1).map(|i| (mask >> i & 1) as u8).collect();
        let v = if mt3 && l != 3 { Variant::Mt3 } else { Variant::Mt2 };
        let input = ConstructionInput::new((0..l as i64).map(int).collect(), lab, v).unwrap();
        let a = build(&input).unwrap().to_json_string();
        prop_assert_eq!(&a, &build(&input).unwrap().to_json_string());
        prop_assert_eq!(Arrangement::from_json_str(&a).unwrap().to_json_string(), a);
    }
}
