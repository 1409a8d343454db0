//! Boundedness and connectivity of `D-bar ∩ {x1 = t}`. By the lift,
//! `f^-1(t)` is compact iff this base slice is bounded: `|y_j|^2 = f_j(x)`
//! is continuous, hence bounded on a bounded closed slice.

use nalgebra::{DMatrix, DVector};
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::sample::{hit_and_run, random_direction, rng, sub_seed};
use crate::arrangement::{sample_region, Arrangement};
use crate::error::Result;
use crate::poly::{rational_to_f64, Rational};

/// Probe radii as multiples of the window half-width.
pub const PROBE_SCALES: [f64; 3] = [2.0, 4.0, 8.0];

#[derive(Clone, Copy, Debug)]
pub struct SliceBudget {
    /// Hit-and-run points inside the slice.
    pub walk: usize,
    /// Upper bound on grid points in the slice hyperplane.
    pub grid_points: usize,
    pub random_probes: usize,
    /// Interior samples drawn when none of the given ones reaches `t`.
    pub extra_samples: usize,
}

impl Default for SliceBudget {
    fn default() -> Self {
        SliceBudget {
            walk: 400,
            grid_points: 40_000,
            random_probes: 8,
            extra_samples: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceClass {
    pub t: f64,
    pub t_exact: String,
    pub bounded: bool,
    pub empty: bool,
    /// `None` when a restricted constraint falls outside the supported
    /// shapes (single-coordinate linear, definite quadratic).
    pub analytic_bounded: Option<bool>,
    pub analytic_note: Option<String>,
    pub empirical_bounded: bool,
    pub agree: bool,
    pub escape_witness: Option<Vec<f64>>,
    pub enclosing_radius: Option<f64>,
    pub components: usize,
    pub grid_points: usize,
    pub grid_members: usize,
}

impl SliceClass {
    pub fn summary(&self) -> String {
        let pt = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        if self.empty {
            return "empty".into();
        }
        match (&self.escape_witness, self.bounded) {
            (Some(w), false) => format!("unbounded; escape witness ({}); components {}", pt(w), self.components),
            _ => format!(
                "bounded; enclosing radius {:.6}; components {}",
                self.enclosing_radius.unwrap_or(0.0),
                self.components
            ),
        }
    }
}

/// Per-coordinate bounds of the slice from the restricted constraints.
#[derive(Clone, Debug)]
struct Analytic {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    empty: bool,
}

impl Analytic {
    fn bounded(&self) -> bool {
        self.empty || (1..self.lower.len()).all(|k| self.lower[k].is_some() && self.upper[k].is_some())
    }
}

fn tighten(slot: &mut Option<f64>, v: f64, upper: bool) {
    *slot = Some(match *slot {
        None => v,
        Some(o) if upper => o.min(v),
        Some(o) => o.max(v),
    });
}

fn analytic(arr: &Arrangement, t: &Rational) -> std::result::Result<Analytic, String> {
    let n = arr.n;
    let mut a = Analytic {
        lower: vec![None; n],
        upper: vec![None; n],
        empty: false,
    };
    for (j, p) in arr.primitives.iter().enumerate() {
        let g = p.f.substitute(0, t).map_err(|e| e.to_string())?;
        let support: Vec<usize> = g.support().into_iter().collect();
        match g.degree() {
            0 => {
                if !g.constant_term().is_positive() {
                    a.empty = true;
                }
            }
            1 => {
                let [k] = support[..] else {
                    return Err(format!("f{} restricts to a linear form in several coordinates", j + 1));
                };
                let mut e = vec![0u32; n];
                e[k] = 1;
                let w = g.coefficient(&e);
                let bound = rational_to_f64(&(-g.constant_term() / &w));
                if w.is_positive() {
                    tighten(&mut a.lower[k], bound, false);
                } else {
                    tighten(&mut a.upper[k], bound, true);
                }
            }
            2 => {
                let d = support.len();
                let mut h = DMatrix::<f64>::zeros(d, d);
                let mut b = DVector::<f64>::zeros(d);
                for (mono, c) in g.terms() {
                    let e = mono.exponents();
                    let idx: Vec<usize> = support
                        .iter()
                        .enumerate()
                        .filter(|(_, &k)| e[k] > 0)
                        .map(|(i, _)| i)
                        .collect();
                    let c = rational_to_f64(c);
                    match (mono.degree(), idx.as_slice()) {
                        (2, [i]) => h[(*i, *i)] = 2.0 * c,
                        (2, [i, k]) => {
                            h[(*i, *k)] = c;
                            h[(*k, *i)] = c;
                        }
                        (1, [i]) => b[*i] = c,
                        _ => {}
                    }
                }
                let eig = h.clone().symmetric_eigen().eigenvalues;
                let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if eig.iter().all(|&v| v < -1e-12 * scale) {
                    // body: {c + b.z + z'Hz/2 > 0} is an ellipsoid
                    let neg_inv = (-h.clone()).try_inverse().ok_or("singular quadratic form")?;
                    let zs = &neg_inv * &b;
                    let gmax = rational_to_f64(&g.constant_term()) + 0.5 * b.dot(&zs);
                    if gmax <= 0.0 {
                        a.empty = true;
                        continue;
                    }
                    for (i, &k) in support.iter().enumerate() {
                        let r = (2.0 * gmax * neg_inv[(i, i)]).sqrt();
                        tighten(&mut a.lower[k], zs[i] - r, false);
                        tighten(&mut a.upper[k], zs[i] + r, true);
                    }
                } else if eig.iter().all(|&v| v > 1e-12 * scale) {
                    // complement of an ellipsoid: no bound in any direction
                } else {
                    return Err(format!("f{} restricts to an indefinite or degenerate quadric", j + 1));
                }
            }
            _ => return Err(format!("f{} has degree above 2", j + 1)),
        }
    }
    Ok(a)
}

/// Points of `D ∩ {x1 = t}` obtained from `xs` by replacing `x1` with `t`.
pub(crate) fn slice_points(arr: &Arrangement, t: f64, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let comp = arr.compiled();
    xs.iter()
        .filter_map(|x| {
            let mut p = x.clone();
            p[0] = t;
            comp.is_open(&p).then_some(p)
        })
        .collect()
}

pub fn classify_slice(arr: &Arrangement, t: &Rational, seed: u64) -> Result<SliceClass> {
    classify_slice_with(arr, t, &[], SliceBudget::default(), seed)
}

fn find(parent: &mut [u32], mut a: u32) -> u32 {
    while parent[a as usize] != a {
        parent[a as usize] = parent[parent[a as usize] as usize];
        a = parent[a as usize];
    }
    a
}

/// Slice classification using the given interior samples of `D` as chord
/// sources (more are drawn if none reaches `t`).
pub fn classify_slice_with(
    arr: &Arrangement,
    t: &Rational,
    interior: &[Vec<f64>],
    budget: SliceBudget,
    seed: u64,
) -> Result<SliceClass> {
    let n = arr.n;
    let tf = rational_to_f64(t);
    let comp = arr.compiled();
    let w = arr.window();
    let mut class = SliceClass {
        t: tf,
        t_exact: t.to_string(),
        bounded: true,
        empty: true,
        analytic_bounded: None,
        analytic_note: None,
        empirical_bounded: true,
        agree: true,
        escape_witness: None,
        enclosing_radius: None,
        components: 0,
        grid_points: 0,
        grid_members: 0,
    };
    if let (Some(lo), Some(hi)) = (arr.t_values.first(), arr.t_values.last()) {
        if t < lo || t > hi {
            class.analytic_bounded = Some(true);
            class.analytic_note = Some("t outside [t_1, t_l]".into());
            return Ok(class);
        }
    }
    let an = analytic(arr, t);
    match &an {
        Ok(a) => class.analytic_bounded = Some(a.bounded()),
        Err(e) => class.analytic_note = Some(e.clone()),
    }

    let mut starts = slice_points(arr, tf, &[arr.seed_f64()]);
    starts.extend(slice_points(arr, tf, interior));
    if starts.is_empty() {
        let more = sample_region(arr, budget.extra_samples, sub_seed(seed, 0))?;
        starts = slice_points(arr, tf, &more);
    }
    let Some(p) = starts.first().cloned() else {
        class.empirical_bounded = true;
        class.agree = class.analytic_bounded == Some(true);
        return Ok(class);
    };
    class.empty = false;
    let free: Vec<usize> = (1..n).collect();
    let mut pts = hit_and_run(comp, &p, &free, &w.lo, &w.hi, budget.walk, sub_seed(seed, 1));
    pts.extend(starts.iter().take(64).cloned());

    // escape probes
    let half = arr.window_spec.half_width;
    let mut dirs: Vec<(Option<(usize, f64)>, Vec<f64>)> = Vec::new();
    for k in 1..n {
        for s in [1.0, -1.0] {
            dirs.push((Some((k, s)), Vec::new()));
        }
    }
    let mut g = rng(sub_seed(seed, 2));
    for _ in 0..budget.random_probes {
        let mut u = vec![0.0; n];
        random_direction(&mut g, &free, &mut u);
        dirs.push((None, u));
    }
    for (axis, u) in &dirs {
        let probe = |scale: f64| -> Vec<f64> {
            let mut x = p.clone();
            match axis {
                Some((k, s)) => x[*k] = s * scale * half,
                None => {
                    for k in 1..n {
                        x[k] = p[k] + scale * half * u[k];
                    }
                }
            }
            x
        };
        if PROBE_SCALES.iter().all(|&s| comp.is_open(&probe(s))) {
            class.escape_witness = Some(probe(PROBE_SCALES[2]));
            break;
        }
    }
    class.empirical_bounded = class.escape_witness.is_none();

    // grid over a box covering the slice inside the window
    let d = n - 1;
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for k in 1..n {
        let (mut a, mut b) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x[k]), b.max(x[k]))
        });
        match &an {
            Ok(an) => {
                a = a.min(an.lower[k].unwrap_or(w.lo[k]));
                b = b.max(an.upper[k].unwrap_or(w.hi[k]));
            }
            Err(_) => {
                let m = 0.1 * (b - a).max(1e-3);
                a -= m;
                b += m;
            }
        }
        let m = 0.02 * (b - a).max(1e-3);
        lo[k] = (a - m).max(w.lo[k]);
        hi[k] = (b + m).min(w.hi[k]);
    }
    let ext: Vec<f64> = (1..n).map(|k| (hi[k] - lo[k]).max(1e-9)).collect();
    let target = budget.grid_points.max(16) as f64;
    let mut h = (ext.iter().product::<f64>() / target).powf(1.0 / d as f64);
    let counts = loop {
        let c: Vec<usize> = ext.iter().map(|e| ((e / h).ceil() as usize).max(3)).collect();
        if c.iter().map(|&v| v as f64).product::<f64>() <= 2.0 * target {
            break c;
        }
        h *= 1.1;
    };
    let total: usize = counts.iter().product();
    let coord = |idx: usize| -> Vec<f64> {
        let mut x = p.clone();
        let mut r = idx;
        for (i, &c) in counts.iter().enumerate() {
            let k = i + 1;
            x[k] = lo[k] + (r % c) as f64 * (hi[k] - lo[k]) / c as f64 + 0.5 * (hi[k] - lo[k]) / c as f64;
            r /= c;
        }
        x
    };
    let member: Vec<bool> = (0..total).into_par_iter().map(|i| comp.is_open(&coord(i))).collect();
    let mut parent: Vec<u32> = (0..total as u32).collect();
    let mut strides = vec![1usize; d];
    for i in 1..d {
        strides[i] = strides[i - 1] * counts[i - 1];
    }
    let full = d <= 2;
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    if full {
        for m in 0..3usize.pow(d as u32) {
            let o: Vec<i64> = (0..d).map(|i| (m / 3usize.pow(i as u32) % 3) as i64 - 1).collect();
            if o.iter().any(|&v| v != 0) {
                offsets.push(o);
            }
        }
    } else {
        for i in 0..d {
            let mut o = vec![0i64; d];
            o[i] = 1;
            offsets.push(o);
        }
    }
    let mut members = 0;
    let mut radius = 0.0f64;
    for idx in 0..total {
        if !member[idx] {
            continue;
        }
        members += 1;
        let x = coord(idx);
        radius = radius.max(x[1..].iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut rem = idx;
        let pos: Vec<i64> = counts
            .iter()
            .map(|&c| {
                let v = (rem % c) as i64;
                rem /= c;
                v
            })
            .collect();
        for o in &offsets {
            let mut nb = 0usize;
            let mut ok = true;
            for i in 0..d {
                let v = pos[i] + o[i];
                if v < 0 || v >= counts[i] as i64 {
                    ok = false;
                    break;
                }
                nb += v as usize * strides[i];
            }
            if ok && member[nb] {
                let (ra, rb) = (find(&mut parent, idx as u32), find(&mut parent, nb as u32));
                if ra != rb {
                    parent[ra.max(rb) as usize] = ra.min(rb);
                }
            }
        }
    }
    let mut roots: Vec<u32> = (0..total)
        .filter(|&i| member[i])
        .map(|i| find(&mut parent, i as u32))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    class.components = roots.len();
    class.grid_points = total;
    class.grid_members = members;
    let cell = (1..n)
        .map(|k| (hi[k] - lo[k]) / counts[k - 1] as f64)
        .fold(0.0f64, f64::max);
    for x in &pts {
        radius = radius.max(x[1..].iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if class.empirical_bounded {
        class.enclosing_radius = Some(radius + cell);
    }
    class.bounded = class.empirical_bounded;
    class.agree = class.analytic_bounded == Some(class.empirical_bounded);
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::tests::unit_square;
    use crate::construct::{build, ConstructionInput, Variant};
    use crate::poly::{int, rat};

    #[test]
    fn strip_escapes_at_96() {
        let a = build(&ConstructionInput::new(vec![int(0), int(1)], vec![1], Variant::Mt2).unwrap()).unwrap();
        let c = classify_slice(&a, &rat(1, 2), 1).unwrap();
        assert!(!c.bounded && c.agree);
        assert_eq!(c.escape_witness, Some(vec![0.5, 96.0]));
        assert_eq!(c.summary(), "unbounded; escape witness (0.5, 96.0); components 1");
    }

    #[test]
    fn square_slice_is_bounded_and_connected() {
        let c = classify_slice(&unit_square(), &rat(1, 2), 1).unwrap();
        assert!(c.bounded && c.agree);
        assert_eq!(c.components, 1);
        assert!(c.enclosing_radius.unwrap() <= 1.01);
    }

    #[test]
    fn mixed_l4_profile() {
        let t = (0..4).map(int).collect();
        let a = build(&ConstructionInput::new(t, vec![0, 1, 0], Variant::Mt2).unwrap()).unwrap();
        let got: Vec<bool> = [rat(1, 2), rat(3, 2), rat(5, 2)]
            .iter()
            .map(|t| {
                let c = classify_slice(&a, t, 3).unwrap();
                assert!(c.agree, "{c:?}");
                assert_eq!(c.components, 1, "{c:?}");
                c.bounded
            })
            .collect();
        assert_eq!(got, vec![true, false, true]);
    }

    #[test]
    fn outside_range_is_empty() {
        let c = classify_slice(&unit_square(), &int(3), 1).unwrap();
        assert!(c.empty && c.bounded);
    }
}
