use serde_json::json;

use super::{Evidence, SingularScan};
use crate::arrangement::sample::sub_seed;
use crate::lift::LiftedManifold;
use crate::poly::{rational_to_f64, Rational};
use crate::report::{CheckRecord, Witness};

pub const IMAGE_TOL: f64 = 1e-12;
pub const SWEEP_BINS: usize = 100;

/// `f(M) = [t_1, t_l]`: sampled values stay inside, both endpoints are hit
/// by exact points of `D-bar`, and every one of 100 equal bins meets
/// `f(M)` (a sampled value, an `x1`-chord of `D` through a sample, or a
/// sample with `x1` moved into the bin).
pub fn verify_image_interval(lm: &LiftedManifold, samples: usize, seed: u64) -> CheckRecord {
    let ev = match Evidence::gather(&lm.arrangement, samples, sub_seed(seed, 0)) {
        Ok(e) => e,
        Err(e) => {
            let mut rec = CheckRecord::new("verify.image_interval").tolerance(IMAGE_TOL);
            rec.fail(Witness::float(e.to_string(), &[]));
            return rec;
        }
    };
    let scan = super::singular::scan_with(lm, &ev);
    image_with(lm, &ev, &scan, samples, sub_seed(seed, 1))
}

pub(crate) fn image_with(
    lm: &LiftedManifold,
    ev: &Evidence,
    scan: &SingularScan,
    samples: usize,
    seed: u64,
) -> CheckRecord {
    let arr = &lm.arrangement;
    let mut rec = CheckRecord::new("verify.image_interval").tolerance(IMAGE_TOL);
    let range: Option<(Rational, Rational)> = match (&arr.expected, arr.t_values.first(), arr.t_values.last()) {
        (Some(e), _, _) => Some((e.image[0].clone(), e.image[1].clone())),
        (None, Some(a), Some(b)) => Some((a.clone(), b.clone())),
        _ => None,
    };
    let Some((lo_q, hi_q)) = range else {
        rec.flag();
        rec.details = json!({"note": "no expected image interval recorded"});
        return rec;
    };
    let (lo, hi) = (rational_to_f64(&lo_q), rational_to_f64(&hi_q));
    let bases: Vec<Vec<f64>> = ev.interior.iter().take(samples).cloned().collect();
    let pts = lm.lift_points(&bases, seed);
    let mut values: Vec<f64> = pts.iter().map(|q| lm.project(q).1).collect();
    values.extend(ev.boundary.iter().map(|b| b.point[0]));
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, v) in values.iter().enumerate() {
        rec.samples += 1;
        vmin = vmin.min(*v);
        vmax = vmax.max(*v);
        if *v < lo - IMAGE_TOL || *v > hi + IMAGE_TOL {
            let p = if i < pts.len() { pts[i].clone() } else { vec![*v] };
            rec.fail(Witness::float(format!("f = {v} outside [{lo_q}, {hi_q}]"), &p).with_value(*v));
        }
    }
    // endpoints: exact points of D-bar with x1 = t_1 and x1 = t_l
    for (target, tag) in [(&lo_q, "lower"), (&hi_q, "upper")] {
        let hit = ev
            .candidates
            .iter()
            .map(|c| (&c.point, c.source.as_str()))
            .chain(
                scan.values
                    .iter()
                    .filter_map(|h| h.exact_point.as_ref().map(|p| (p, h.source.as_str()))),
            )
            .find(|(p, _)| &p[0] == target);
        match hit {
            Some((p, src)) => rec.witness(Witness::exact(format!("{tag} endpoint {target} attained ({src})"), p)),
            None => rec.fail(Witness::float(
                format!("no exact point of D-bar found with x1 = {target}"),
                &[rational_to_f64(target)],
            )),
        }
    }
    // sweep: bins covered by sampled values or by x1-chords through samples
    let comp = arr.compiled();
    let w = arr.window();
    let width = (hi - lo) / SWEEP_BINS as f64;
    let mut covered = [false; SWEEP_BINS];
    let bin = |v: f64| -> Option<usize> {
        if width <= 0.0 || v < lo || v > hi {
            return None;
        }
        Some((((v - lo) / width) as usize).min(SWEEP_BINS - 1))
    };
    for v in &values {
        if let Some(b) = bin(*v) {
            covered[b] = true;
        }
    }
    let mut e1 = vec![0.0; arr.n];
    e1[0] = 1.0;
    let mut chord_bins = 0;
    for x in &ev.interior {
        let ch = comp.chord(x, &e1, &w.lo, &w.hi);
        let (a, b) = (x[0] + ch.lo, x[0] + ch.hi);
        for (k, c) in covered.iter_mut().enumerate() {
            let (bl, bh) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
            if !*c && a < bh && b > bl {
                *c = true;
                chord_bins += 1;
            }
        }
    }
    // remaining bins: a sample (or the seed) moved to the bin centre
    let mut sources = vec![arr.seed_f64()];
    sources.extend(ev.interior.iter().cloned());
    let mut moved_bins = 0;
    for (k, c) in covered.iter_mut().enumerate() {
        if !*c && !super::slice::slice_points(arr, lo + (k as f64 + 0.5) * width, &sources).is_empty() {
            *c = true;
            moved_bins += 1;
        }
    }
    let empty: Vec<usize> = (0..SWEEP_BINS).filter(|&k| !covered[k]).collect();
    for &k in &empty {
        let c = lo + (k as f64 + 0.5) * width;
        rec.fail(Witness::float(format!("sweep bin {} has no value of f", k + 1), &[c]));
    }
    rec.details = json!({
        "interval": [lo_q.to_string(), hi_q.to_string()],
        "observed": [vmin, vmax],
        "bins": SWEEP_BINS,
        "bins_from_chords": chord_bins,
        "bins_from_moved_samples": moved_bins,
        "empty_bins": empty.len(),
    });
    rec
}
