use rayon::prelude::*;
use serde_json::json;

use super::Evidence;
use crate::arrangement::sample::sub_seed;
use crate::arrangement::RANK_TOL;
use crate::lift::LiftedManifold;
use crate::linalg::row_rank_ratio;
use crate::report::{CheckRecord, Witness};

/// Jacobian rank `l` at sampled points of `M`, with the base points
/// deliberately stressed: points on each `S_j`, located intersections
/// (exact rank when snapped) and the exact candidate list (poles, corners).
pub fn verify_nonsingular(lm: &LiftedManifold, samples: usize, seed: u64) -> CheckRecord {
    match Evidence::gather(&lm.arrangement, samples, sub_seed(seed, 0)) {
        Ok(e) => nonsingular_with(lm, &e, samples, sub_seed(seed, 1)),
        Err(e) => {
            let mut rec = CheckRecord::new("verify.nonsingular").tolerance(RANK_TOL);
            rec.fail(Witness::float(e.to_string(), &[]));
            rec
        }
    }
}

pub(crate) fn nonsingular_with(lm: &LiftedManifold, ev: &Evidence, samples: usize, seed: u64) -> CheckRecord {
    let l = lm.l();
    let mut rec = CheckRecord::new("verify.nonsingular").tolerance(RANK_TOL);
    let mut bases: Vec<(&'static str, Vec<f64>)> = Vec::new();
    bases.extend(ev.interior.iter().take(samples).map(|x| ("interior", x.clone())));
    for b in &ev.boundary {
        bases.push(("boundary", b.point.clone()));
        bases.push(("boundary", b.point.clone()));
    }
    bases.extend(ev.strata.iter().map(|s| ("intersection", s.point.clone())));
    bases.extend(
        ev.candidates
            .iter()
            .map(|c| ("candidate", c.point.iter().map(crate::poly::rational_to_f64).collect())),
    );
    let pts: Vec<Vec<f64>> = bases.iter().map(|(_, x)| x.clone()).collect();
    let lifted = lm.lift_points(&pts, seed);
    let ratios: Vec<f64> = lifted.par_iter().map(|q| row_rank_ratio(&lm.jacobian(q))).collect();
    let mut worst = f64::INFINITY;
    for ((src, _), (q, r)) in bases.iter().zip(lifted.iter().zip(&ratios)) {
        rec.samples += 1;
        worst = worst.min(*r);
        if !(*r > RANK_TOL) {
            rec.fail(Witness::float(format!("{src} point: singular value ratio {r:e}"), q).with_value(*r));
        }
    }
    let mut exact_checked = 0;
    for c in &ev.candidates {
        exact_checked += 1;
        match lm.exact_rank_over(&c.point) {
            Ok(r) if r == l => {
                if rec.witnesses.len() < 4 {
                    rec.witness(Witness::exact(format!("{}: exact rank {r}", c.source), &c.point));
                }
            }
            Ok(r) => rec.fail(Witness::exact(format!("{}: exact rank {r} < {l}", c.source), &c.point)),
            Err(e) => rec.fail(Witness::exact(format!("{}: {e}", c.source), &c.point)),
        }
    }
    let count = |s: &str| bases.iter().filter(|(src, _)| *src == s).count();
    rec.details = json!({
        "interior": count("interior"),
        "boundary": count("boundary"),
        "intersection": count("intersection"),
        "candidate": count("candidate"),
        "exact_rank_checks": exact_checked,
        "min_ratio": if worst.is_finite() { worst } else { 0.0 },
    });
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Arrangement;
    use crate::geom::{ellipsoid, Orientation};
    use crate::lift::lift;
    use crate::poly::int;

    #[test]
    fn tangent_circles_lift_is_singular_at_contact() {
        let disc = |c: i64| ellipsoid(vec![int(c), int(0)], vec![int(1), int(1)], Orientation::Body).unwrap();
        let a = Arrangement::new_unchecked(2, vec![disc(0), disc(2)], vec![int(1), int(0)], "tangent").unwrap();
        let lm = lift(&a, 4).unwrap();
        assert_eq!(lm.exact_rank_over(&[int(1), int(0)]).unwrap(), 1);
    }

    #[test]
    fn square_lift_is_nonsingular() {
        let lm = lift(&crate::arrangement::tests::unit_square(), 6).unwrap();
        let rec = verify_nonsingular(&lm, 200, 3);
        assert!(rec.passed(), "{:?}", rec.counterexamples);
        assert!(rec.samples >= 200);
    }
}
