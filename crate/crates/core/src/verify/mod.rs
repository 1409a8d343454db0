//! Checks of the lifted manifold against the expected profile: Jacobian
//! rank, image interval, singular values of `f = x1`, slice boundedness
//! and connectivity per interval, and fibre structure.

mod evidence;
pub mod image;
pub mod nonsingular;
pub mod singular;
pub mod slice;

use std::time::Instant;

use num_traits::Zero;
use rand::Rng;
use serde_json::json;

pub use evidence::{Candidate, Evidence};
pub use image::verify_image_interval;
pub use nonsingular::verify_nonsingular;
pub use singular::{detect_singular_values, SingularHit, SingularScan};
pub use slice::{classify_slice, classify_slice_with, SliceBudget, SliceClass};

use crate::arrangement::sample::{rng, sub_seed};
use crate::arrangement::{check_ncd, NcdBudget, Point};
use crate::lift::LiftedManifold;
use crate::poly::{rational_to_f64, Rational};
use crate::report::{CheckRecord, Report, Verdict, Witness};

/// Agreement tolerance between detected and expected singular values.
pub const VALUE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    /// Manifold points for the rank and image checks.
    pub samples: usize,
    pub ncd: NcdBudget,
    pub slices_per_interval: usize,
    pub slice: SliceBudget,
    pub run_ncd: bool,
    /// Record wall time per check (makes reports run-dependent).
    pub timings: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 2000,
            ncd: NcdBudget::default(),
            slices_per_interval: 5,
            slice: SliceBudget::default(),
            run_ncd: true,
            timings: false,
        }
    }
}

fn timed(timings: bool, f: impl FnOnce() -> CheckRecord) -> CheckRecord {
    let start = Instant::now();
    let mut rec = f();
    if timings {
        rec.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    rec
}

/// Expected singular values: the profile's, else the recorded t-values.
fn expected_values(lm: &LiftedManifold) -> Vec<Rational> {
    let a = &lm.arrangement;
    a.expected
        .as_ref()
        .map(|e| e.singular_values.clone())
        .unwrap_or_else(|| a.t_values.clone())
}

/// Detected clusters against the expected set: extra values fail, missing
/// ones are flagged as not found.
pub fn compare_singular_values(scan: &SingularScan, expected: &[Rational]) -> CheckRecord {
    let mut rec = CheckRecord::new("verify.singular_values").tolerance(VALUE_TOL);
    rec.samples = scan.points_tested;
    let exp: Vec<f64> = expected.iter().map(rational_to_f64).collect();
    let found: Vec<f64> = scan.values.iter().map(|h| h.value).collect();
    for h in &scan.values {
        if !exp.iter().any(|e| (e - h.value).abs() <= VALUE_TOL) {
            rec.fail(h.witness(format!("unexpected singular value {}", h.display_value())));
        }
    }
    let mut missing = Vec::new();
    for (e, q) in exp.iter().zip(expected) {
        match scan.values.iter().find(|h| (h.value - e).abs() <= VALUE_TOL) {
            Some(h) => rec.witness(h.witness(format!("t = {q}"))),
            None => missing.push(q.to_string()),
        }
    }
    if !missing.is_empty() && rec.verdict == Verdict::Pass {
        rec.flag();
    }
    rec.details = json!({
        "expected": expected.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "found": scan.values.iter().map(SingularHit::display_value).collect::<Vec<_>>(),
        "found_f64": found,
        "exact": scan.values.iter().filter(|h| h.exact.is_some()).count(),
        "not_found": missing,
    });
    rec
}

/// Slice boundedness per interval against the expected profile at
/// `per_interval` seeded values of `t`; also requires analytic/empirical
/// agreement and a single grid component.
pub fn verify_slices(
    lm: &LiftedManifold,
    evidence: &Evidence,
    per_interval: usize,
    budget: SliceBudget,
    seed: u64,
) -> CheckRecord {
    let a = &lm.arrangement;
    let mut rec = CheckRecord::new("verify.slices");
    let Some(expected) = a.expected.as_ref() else {
        rec.flag();
        rec.details = json!({"note": "no expected profile"});
        return rec;
    };
    let mut g = rng(sub_seed(seed, 0));
    let mut queries = Vec::new();
    for (i, iv) in expected.intervals.iter().enumerate() {
        let mut fr = std::collections::BTreeSet::new();
        while fr.len() < per_interval.min(1023) {
            fr.insert(g.random_range(1..1024u32));
        }
        for f in fr {
            let t = &iv.lo + (&iv.hi - &iv.lo) * Rational::new(f.into(), 1024.into());
            queries.push((i, t));
        }
    }
    use rayon::prelude::*;
    let results: Vec<(usize, Rational, crate::Result<SliceClass>)> = queries
        .into_par_iter()
        .enumerate()
        .map(|(qi, (i, t))| {
            let r = classify_slice_with(a, &t, &evidence.interior, budget, sub_seed(seed, 1 + qi as u64));
            (i, t, r)
        })
        .collect();
    let mut rows = Vec::new();
    for (i, t, r) in results {
        rec.samples += 1;
        let iv = &expected.intervals[i];
        match r {
            Err(e) => rec.fail(Witness::float(format!("t = {t}: {e}"), &[rational_to_f64(&t)])),
            Ok(c) => {
                let mut problems = Vec::new();
                if !c.agree {
                    problems.push(format!(
                        "analytic {:?} vs empirical {}",
                        c.analytic_bounded,
                        if c.empirical_bounded { "bounded" } else { "unbounded" }
                    ));
                }
                if c.bounded != iv.bounded {
                    problems.push(format!(
                        "slice is {} but label {} expects {}",
                        if c.bounded { "bounded" } else { "unbounded" },
                        iv.label,
                        if iv.bounded { "bounded" } else { "unbounded" }
                    ));
                }
                if c.components != 1 {
                    problems.push(format!("{} grid components", c.components));
                }
                let pt = c.escape_witness.clone().unwrap_or_else(|| vec![c.t]);
                if problems.is_empty() {
                    if rec.witnesses.len() < 2 * expected.intervals.len() {
                        rec.witness(Witness::float(format!("t = {t}: {}", c.summary()), &pt));
                    }
                } else {
                    rec.fail(Witness::float(format!("t = {t}: {}", problems.join("; ")), &pt));
                }
                rows.push(json!({
                    "interval": i + 1,
                    "t": t.to_string(),
                    "bounded": c.bounded,
                    "expected_bounded": iv.bounded,
                    "analytic_bounded": c.analytic_bounded,
                    "components": c.components,
                }));
            }
        }
    }
    rec.details = json!({ "queries": rows });
    rec
}

/// Fibre structure over base points of `D-bar`: nonempty, dimension at most
/// `m - n`, no zero-dimensional sphere factor, degenerate factors exactly on
/// the active blocks, and lifted points satisfying every `F_j`.
pub fn verify_fibers(lm: &LiftedManifold, evidence: &Evidence, seed: u64) -> CheckRecord {
    let mut rec = CheckRecord::new("verify.fibers").tolerance(1e-10);
    let bound = lm.m - lm.n();
    let mut max_dim = 0;
    let mut check = |rec: &mut CheckRecord, p: Point, what: &str| {
        rec.samples += 1;
        let x = p.to_f64();
        match lm.fiber_at(&p) {
            Err(e) => rec.fail(Witness::float(format!("{what}: {e}"), &x)),
            Ok(f) if f.is_empty() => rec.fail(Witness::float(format!("{what}: empty fibre over D-bar"), &x)),
            Ok(f) => {
                max_dim = max_dim.max(f.dimension());
                if f.dimension() > bound {
                    rec.fail(Witness::float(
                        format!("{what}: fibre dimension {} > m - n", f.dimension()),
                        &x,
                    ));
                }
                if f.factors.iter().any(|s| s.sphere_dim == 0) {
                    rec.fail(Witness::float(format!("{what}: zero-dimensional sphere factor"), &x));
                }
                if let Point::Exact(q) = &p {
                    for (j, fac) in f.factors.iter().enumerate() {
                        let active = lm.arrangement.primitives[j]
                            .f
                            .eval(q)
                            .map(|v| v.is_zero())
                            .unwrap_or(false);
                        if active != fac.is_degenerate() {
                            rec.fail(Witness::exact(
                                format!("{what}: block {} degeneracy mismatch", j + 1),
                                q,
                            ));
                        }
                    }
                }
            }
        }
    };
    for x in evidence.interior.iter().take(200) {
        check(&mut rec, Point::Float(x.clone()), "interior");
    }
    for b in &evidence.boundary {
        check(&mut rec, Point::Float(b.point.clone()), "boundary");
    }
    for c in &evidence.candidates {
        check(&mut rec, Point::Exact(c.point.clone()), &c.source);
    }
    let bases: Vec<Vec<f64>> = evidence
        .interior
        .iter()
        .take(200)
        .cloned()
        .chain(evidence.boundary.iter().map(|b| b.point.clone()))
        .collect();
    let lifted = lm.lift_points(&bases, seed);
    let comp = lm.arrangement.compiled();
    let mut worst = 0.0f64;
    for (x, q) in bases.iter().zip(&lifted) {
        // relative to the size of f_j(x): float evaluation cannot do better
        let r = lm
            .residuals(q)
            .into_iter()
            .zip(comp.values(x))
            .fold(0.0f64, |m, (v, f)| m.max(v.abs() / f.abs().max(1.0)));
        worst = worst.max(r);
        if r >= 1e-10 {
            rec.fail(Witness::float(format!("lifted point relative residual {r:e}"), q).with_value(r));
        }
    }
    rec.details = json!({
        "bound_m_minus_n": bound,
        "max_fibre_dimension": max_dim,
        "lifted_points": lifted.len(),
        "max_relative_residual": worst,
    });
    rec
}

/// Every check on one lifted instance. The global verdict is the
/// conjunction; flagged checks do not pass.
pub fn run_suite(lm: &LiftedManifold, cfg: &VerifyConfig, seed: u64) -> Report {
    let a = &lm.arrangement;
    let mut checks = Vec::new();
    if cfg.run_ncd {
        let ncd = check_ncd(a, &cfg.ncd, sub_seed(seed, 100));
        checks.extend(ncd.checks);
    }
    // the rank check's wall time includes this shared sampling
    let start = Instant::now();
    let evidence = match Evidence::gather(a, cfg.samples, sub_seed(seed, 101)) {
        Ok(e) => e,
        Err(e) => {
            let mut rec = CheckRecord::new("verify.sampling");
            rec.fail(Witness::float(e.to_string(), &[]));
            checks.push(rec);
            return Report::new(subject(lm), seed, checks);
        }
    };
    let mut rec = nonsingular::nonsingular_with(lm, &evidence, cfg.samples, sub_seed(seed, 102));
    if cfg.timings {
        rec.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    checks.push(rec);
    let scan = singular::scan_with(lm, &evidence);
    checks.push(timed(cfg.timings, || {
        image::image_with(lm, &evidence, &scan, cfg.samples, sub_seed(seed, 103))
    }));
    checks.push(timed(cfg.timings, || {
        compare_singular_values(&scan, &expected_values(lm))
    }));
    checks.push(timed(cfg.timings, || {
        verify_slices(lm, &evidence, cfg.slices_per_interval, cfg.slice, sub_seed(seed, 104))
    }));
    checks.push(timed(cfg.timings, || verify_fibers(lm, &evidence, sub_seed(seed, 105))));
    Report::new(subject(lm), seed, checks)
}

fn subject(lm: &LiftedManifold) -> String {
    format!("{} (n={}, l={}, m={})", lm.arrangement.provenance, lm.n(), lm.l(), lm.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build, ConstructionInput, ExpectedProfile, Variant};
    use crate::lift::{lift, min_m};
    use crate::poly::int;

    fn instance(t: &[i64], labels: &[u8], v: Variant) -> LiftedManifold {
        let a =
            build(&ConstructionInput::new(t.iter().map(|&x| int(x)).collect(), labels.to_vec(), v).unwrap()).unwrap();
        let m = min_m(&a);
        lift(&a, m).unwrap()
    }

    fn quick() -> VerifyConfig {
        VerifyConfig {
            samples: 300,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn rectangle_suite_passes() {
        let lm = instance(&[0, 1], &[0], Variant::Mt2);
        let r = run_suite(&lm, &quick(), 42);
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn mixed_l4_suite_passes() {
        let lm = instance(&[0, 1, 2, 3], &[0, 1, 0], Variant::Mt2);
        let r = run_suite(&lm, &quick(), 7);
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn permuted_labels_are_caught() {
        let mut lm = instance(&[0, 1, 2, 3], &[0, 1, 0], Variant::Mt2);
        lm.arrangement.expected = Some(ExpectedProfile::from_labels(&lm.arrangement.t_values, &[1, 0, 0]));
        let cfg = VerifyConfig {
            run_ncd: false,
            ..quick()
        };
        let r = run_suite(&lm, &cfg, 7);
        assert_eq!(r.verdict_of("verify.slices"), Verdict::Fail);
        assert!(!r.passed());
    }
}
