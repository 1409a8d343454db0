//! Worked examples with hand-computed answers, one block per module.

use ncd_core::arrangement::{check_ncd, sample_region, Arrangement, Membership, NcdBudget, Point};
use ncd_core::construct::{build, predicted_profile, ConstructionInput, Variant};
use ncd_core::geom::{
    ellipsoid, embed_plane_primitive, half_plane, hyperbola_region, region_r, HyperbolaVariant, Orientation,
    RegionKind, Side,
};
use ncd_core::lift::lift;
use ncd_core::poly::{int, rat, Polynomial, Rational};
use ncd_core::report::Verdict;
use ncd_core::verify::{classify_slice, detect_singular_values, verify_image_interval, verify_nonsingular};

fn p(text: &str, n: usize) -> Polynomial {
    Polynomial::parse(text, n).unwrap()
}

fn q(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&a| int(a)).collect()
}

fn construct(t: &[i64], labels: &[u8], v: Variant) -> Arrangement {
    build(&ConstructionInput::new(q(t), labels.to_vec(), v).unwrap()).unwrap()
}

#[test]
fn polynomial_examples() {
    let h = p("1 - (x1 - 2)*x2", 2);
    assert_eq!(h.eval(&q(&[2, 0])).unwrap(), int(1));
    assert_eq!(h.eval(&q(&[3, 1])).unwrap(), int(0));
    assert_eq!(p("1 - x1^2 - x2^2", 2).eval(&[rat(3, 5), rat(4, 5)]).unwrap(), int(0));
    assert!(p("x1^2", 2).partial(1).unwrap().is_zero());
    let g: Vec<Rational> = p("1 - x1^2 - x2^2", 2)
        .gradient()
        .iter()
        .map(|d| d.eval(&q(&[1, 0])).unwrap())
        .collect();
    assert_eq!(g, q(&[-2, 0]));
    let y = p("-x3^2", 3);
    assert_eq!(y.partial(2).unwrap(), p("-2*x3", 3));

    let id = vec![q(&[1, 0]), q(&[0, 1])];
    assert_eq!(h.affine_subst(&id, &q(&[0, 0])).unwrap(), h);
    let swap = vec![q(&[0, 1]), q(&[1, 0])];
    assert_eq!(p("x2", 2).affine_subst(&swap, &q(&[0, 0])).unwrap(), p("x1", 2));
    assert_eq!(h.embed(5, &[0, 3]).unwrap(), p("1 - (x1 - 2)*x4", 5));
}

#[test]
fn primitive_examples() {
    let z = |a, b| [int(a), int(b)];
    assert_eq!(half_plane(z(0, 0), z(0, 1), Side::Plus).unwrap().f, p("x1", 2));
    assert_eq!(half_plane(z(0, 0), z(1, 0), Side::Plus).unwrap().f, p("x2", 2));
    assert_eq!(half_plane(z(0, 1), z(1, 1), Side::Minus).unwrap().f, p("1 - x2", 2));

    let left = hyperbola_region(HyperbolaVariant::LeftOf, int(2), int(0), int(1)).unwrap();
    assert_eq!(left.f, p("1 - (x1 - 2)*x2", 2));
    assert_eq!(left.f.eval(&q(&[4, 1])).unwrap(), int(-1));
    assert!(left.component.contains(&q(&[3, 1])).unwrap());
    let right = hyperbola_region(HyperbolaVariant::RightOf, int(0), int(0), int(-1)).unwrap();
    assert_eq!(right.f, p("x1*x2 + 1", 2));

    let seg = ellipsoid(q(&[0]), q(&[1]), Orientation::Body).unwrap();
    assert_eq!(seg.f, p("1 - x1^2", 1));

    assert_eq!(embed_plane_primitive(&left, 5, 3).unwrap().f, p("1 - (x1 - 2)*x4", 5));
    let floor = half_plane(z(0, 0), z(1, 0), Side::Plus).unwrap();
    assert_eq!(embed_plane_primitive(&floor, 5, 3).unwrap().f, p("x4", 5));
    assert_eq!(embed_plane_primitive(&floor, 2, 1).unwrap().f, floor.f);

    let flat: Vec<Polynomial> = region_r(RegionKind::Flat, &q(&[0, 1]), &int(0), &int(1))
        .unwrap()
        .into_iter()
        .map(|r| r.f)
        .collect();
    assert_eq!(flat, vec![p("x2", 2), p("x1*x2 + 1", 2), p("1 - (x1 - 1)*x2", 2)]);
}

#[test]
fn arrangement_examples() {
    let rect = construct(&[0, 1], &[0], Variant::Mt2);
    assert_eq!(rect.membership(&[rat(1, 2), rat(1, 2)]).unwrap(), Membership::Interior);
    assert_eq!(rect.membership(&q(&[0, 0])).unwrap(), Membership::Boundary(vec![0, 1]));
    assert_eq!(rect.membership(&q(&[2, 0])).unwrap(), Membership::Exterior);
    let pts = sample_region(&rect, 10, 1).unwrap();
    assert_eq!(pts.len(), 10);
    assert!(pts
        .iter()
        .all(|x| rect.membership_f64(x).unwrap() == Membership::Interior));
    let rank = rect
        .check_transversality_at(&Point::Exact(q(&[0, 0])), &[0, 1])
        .unwrap();
    assert_eq!(rank.rank, 2);

    // flat region without its floor: the far hyperbola branches enter the closure
    let mut prims = region_r(RegionKind::Flat, &q(&[0, 1]), &int(0), &int(1)).unwrap();
    prims.remove(0);
    let open = Arrangement::new(2, prims, vec![rat(1, 2), rat(1, 2)], "flat without floor").unwrap();
    let r = check_ncd(&open, &NcdBudget::default(), 3);
    assert_eq!(r.check("ncd.off_component").unwrap().verdict, Verdict::Fail);
}

#[test]
fn construction_examples() {
    let rect = construct(&[0, 1], &[0], Variant::Mt2);
    let fs: Vec<Polynomial> = rect.primitives.iter().map(|r| r.f.clone()).collect();
    assert_eq!(fs, vec![p("x1", 2), p("x2", 2), p("1 - x1", 2), p("1 - x2", 2)]);

    let four = construct(&[0, 1, 2, 3], &[0, 0, 0], Variant::Mt2);
    assert_eq!(four.n, 3);
    let holes: Vec<_> = four
        .primitives
        .iter()
        .filter(|r| r.kind_tag() == "ellipsoid_hole")
        .collect();
    assert_eq!(holes.len(), 1);
    // the hole is removed around its centre (3/2, 1/2, 0)
    assert!(holes[0].f.eval(&[rat(3, 2), rat(1, 2), int(0)]).unwrap() < int(0));

    let disc = construct(&[-1, 1], &[0], Variant::Mt3);
    assert_eq!(disc.primitives.len(), 1);
    assert_eq!(disc.primitives[0].f, p("1 - x1^2 - x2^2", 2));

    let prof = predicted_profile(&ConstructionInput::new(q(&[0, 1, 2, 3]), vec![0, 1, 0], Variant::Mt2).unwrap());
    let b: Vec<bool> = prof.intervals.iter().map(|i| i.bounded).collect();
    assert_eq!(b, vec![true, false, true]);
}

#[test]
fn lift_examples() {
    let s3 = lift(&construct(&[-1, 1], &[0], Variant::Mt3), 3).unwrap();
    assert_eq!(s3.equations, vec![p("1 - x1^2 - x2^2 - x3^2 - x4^2", 4)]);
    let rect = lift(&construct(&[0, 1], &[0], Variant::Mt2), 6).unwrap();
    assert_eq!(
        (rect.equations.len(), rect.block_sizes.clone(), rect.ambient_dim()),
        (4, vec![2; 4], 10)
    );
    let strip = construct(&[0, 1], &[1], Variant::Mt2);
    let ls = lift(&strip, strip.n + strip.l()).unwrap();
    assert_eq!(ls.ambient_dim(), strip.n + 2 * strip.l());

    let f = s3.fiber_at(&Point::Exact(q(&[0, 0]))).unwrap();
    assert_eq!((f.factors[0].sphere_dim, f.factors[0].exact.clone()), (1, Some(int(1))));
    let pole = s3.fiber_at(&Point::Exact(q(&[1, 0]))).unwrap();
    assert!(pole.factors[0].is_degenerate());

    let pts = s3.sample_manifold(1000, 5).unwrap();
    assert_eq!(pts, s3.sample_manifold(1000, 5).unwrap());
    for x in &pts {
        assert!((x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
        assert_eq!(s3.project(x).1, x[0]);
    }
    assert_eq!(s3.project(&[1.0, 0.0, 0.0, 0.0]).1, 1.0);
}

#[test]
fn verification_examples() {
    let strip = construct(&[0, 1], &[1], Variant::Mt2);
    let c = classify_slice(&strip, &rat(1, 2), 1).unwrap();
    assert_eq!((c.bounded, c.escape_witness), (false, Some(vec![0.5, 96.0])));
    let rect = construct(&[0, 1], &[0], Variant::Mt2);
    let c = classify_slice(&rect, &rat(1, 2), 1).unwrap();
    assert_eq!((c.bounded, c.components), (true, 1));
    assert!(classify_slice(&rect, &int(3), 1).unwrap().empty);

    let mixed = construct(&[0, 1, 2, 3], &[0, 1, 0], Variant::Mt2);
    let b: Vec<bool> = [rat(1, 2), rat(3, 2), rat(5, 2)]
        .iter()
        .map(|t| classify_slice(&mixed, t, 2).unwrap().bounded)
        .collect();
    assert_eq!(b, vec![true, false, true]);

    let s3 = lift(&construct(&[-1, 1], &[0], Variant::Mt3), 3).unwrap();
    let sv = detect_singular_values(&s3, 500, 1).unwrap();
    assert_eq!(
        sv.values.iter().map(|h| h.exact.clone().unwrap()).collect::<Vec<_>>(),
        q(&[-1, 1])
    );
    assert!(verify_image_interval(&s3, 500, 1).passed());
    assert!(verify_nonsingular(&s3, 500, 1).passed());

    let a = construct(&[0, 1, 2, 3], &[0, 0, 0], Variant::Mt2);
    let four = lift(&a, a.n + a.l()).unwrap();
    let sv = detect_singular_values(&four, 500, 1).unwrap();
    let v: Vec<String> = sv.values.iter().map(|h| h.display_value()).collect();
    assert_eq!(v, vec!["0", "1", "2", "3"]);
    let ls = lift(&strip, strip.n + strip.l()).unwrap();
    assert!(verify_image_interval(&ls, 500, 1).passed());
}
