use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::json;

use super::sample::{random_direction, rng, sub_seed};
use super::strata::{locate_strata, StrataBudget};
use super::{sample_boundary, sample_region, Arrangement, Compiled, Point, Window, ACTIVATION_TOL, RANK_TOL};
use crate::arrangement::compiled::quadratic_roots;
use crate::geom::{Metadata, PrimitiveKind};
use crate::poly::{exact_sqrt, rational_to_f64, snap_f64, Polynomial, Rational};
use crate::report::{CheckRecord, Report, Verdict, Witness};

#[derive(Clone, Copy, Debug)]
pub struct NcdBudget {
    pub interior_samples: usize,
    pub boundary_per_primitive: usize,
    pub grid_step: f64,
    /// Random lines per interior sample for the off-component search, on top
    /// of the coordinate axes.
    pub random_lines: usize,
    pub strata: StrataBudget,
}

impl Default for NcdBudget {
    fn default() -> Self {
        NcdBudget {
            interior_samples: 400,
            boundary_per_primitive: 16,
            grid_step: 0.02,
            random_lines: 1,
            strata: StrataBudget::default(),
        }
    }
}

/// Checks the NCD conditions and returns one record per condition:
/// seed interior, closure consistency, off-component separation,
/// transversality, connectivity and hole separation.
pub fn check_ncd(arr: &Arrangement, budget: &NcdBudget, seed: u64) -> Report {
    let comp = arr.compiled();
    let seed_f = arr.seed_f64();
    let mut seed_rec = CheckRecord::new("ncd.seed_interior");
    seed_rec.samples = 1;
    let seed_ok = comp.is_open(&seed_f)
        && arr
            .primitives
            .iter()
            .all(|p| p.f.eval(&arr.seed_point).map(|v| v.is_positive()).unwrap_or(false));
    if seed_ok {
        seed_rec.witness(Witness::exact("seed point", &arr.seed_point));
    } else {
        seed_rec.fail(Witness::exact("seed point not interior", &arr.seed_point));
    }

    let interior = if seed_ok {
        sample_region(arr, budget.interior_samples, sub_seed(seed, 1)).unwrap_or_default()
    } else {
        Vec::new()
    };
    let boundary = sample_boundary(arr, &interior, budget.boundary_per_primitive, sub_seed(seed, 2));

    let (closure, connectivity) = grid_checks(arr, budget.grid_step);
    let off = off_component(arr, &interior, budget.random_lines, sub_seed(seed, 3));
    let trans = transversality(arr, &boundary, sub_seed(seed, 4), budget.strata);
    let holes = certify_holes(arr);
    Report::new(
        "check_ncd",
        seed,
        vec![seed_rec, closure, off, trans, connectivity, holes],
    )
}

struct SectionScan {
    closed: usize,
    closure_fail: Vec<Vec<f64>>,
    components: usize,
    component_points: Vec<Vec<f64>>,
}

fn find(parent: &mut [u32], mut a: u32) -> u32 {
    while parent[a as usize] != a {
        let p = parent[parent[a as usize] as usize];
        parent[a as usize] = p;
        a = p;
    }
    a
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Scans the plane through `base` spanned by `x1` and `x_k` (a line when
/// `k` is `None`). Cells: 0 outside, 1 in the closed set only, 2 open.
fn scan_section(comp: &Compiled, w: &Window, base: &[f64], k: Option<usize>, h: f64) -> SectionScan {
    let nx = ((w.hi[0] - w.lo[0]) / h).floor() as usize + 1;
    let (ny, lo_k) = match k {
        Some(k) => (((w.hi[k] - w.lo[k]) / h).floor() as usize + 1, w.lo[k]),
        None => (1, 0.0),
    };
    let point = |i: usize, j: usize| -> Vec<f64> {
        let mut x = base.to_vec();
        x[0] = w.lo[0] + i as f64 * h;
        if let Some(k) = k {
            x[k] = lo_k + j as f64 * h;
        }
        x
    };
    let flags: Vec<u8> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut x = point(i, 0);
            (0..ny).map(move |j| {
                if let Some(k) = k {
                    x[k] = lo_k + j as f64 * h;
                }
                let mut closed = true;
                let mut open = true;
                for f in &comp.f {
                    let v = f.eval(&x);
                    if v < 0.0 {
                        closed = false;
                        open = false;
                        break;
                    }
                    if v == 0.0 {
                        open = false;
                    }
                }
                if open {
                    2u8
                } else if closed {
                    1
                } else {
                    0
                }
            })
        })
        .collect();
    let at = |i: usize, j: usize| flags[i * ny + j];
    let mut closed = 0;
    let mut closure_fail = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let f = at(i, j);
            if f == 0 {
                continue;
            }
            closed += 1;
            if f == 2 {
                continue;
            }
            let mut near = false;
            'scan: for a in i.saturating_sub(2)..=(i + 2).min(nx - 1) {
                for b in j.saturating_sub(2)..=(j + 2).min(ny - 1) {
                    if at(a, b) == 2 {
                        near = true;
                        break 'scan;
                    }
                }
            }
            if !near && closure_fail.len() < 4 {
                closure_fail.push(point(i, j));
            }
        }
    }
    let mut parent: Vec<u32> = (0..(nx * ny) as u32).collect();
    for i in 0..nx {
        for j in 0..ny {
            if at(i, j) != 2 {
                continue;
            }
            let me = (i * ny + j) as u32;
            if j + 1 < ny && at(i, j + 1) == 2 {
                union(&mut parent, me, me + 1);
            }
            if i + 1 < nx {
                for b in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                    if at(i + 1, b) == 2 {
                        union(&mut parent, me, ((i + 1) * ny + b) as u32);
                    }
                }
            }
        }
    }
    let mut roots = BTreeMap::new();
    for i in 0..nx {
        for j in 0..ny {
            if at(i, j) == 2 {
                let r = find(&mut parent, (i * ny + j) as u32);
                roots.entry(r).or_insert((i, j));
            }
        }
    }
    SectionScan {
        closed,
        closure_fail,
        components: roots.len(),
        component_points: roots.values().map(|&(i, j)| point(i, j)).collect(),
    }
}

/// Base points for section grids: the seed and every full-dimensional hole
/// centre (other coordinates from the seed).
fn section_bases(arr: &Arrangement) -> Vec<(String, Vec<f64>)> {
    let seed = arr.seed_f64();
    let mut out = vec![("seed".to_string(), seed.clone())];
    for (j, p) in arr.primitives.iter().enumerate() {
        if let (PrimitiveKind::EllipsoidHole, Metadata::Ellipsoid { centers, .. }) = (p.kind, &p.metadata) {
            let mut b = seed.clone();
            for (i, &a) in p.axes.iter().enumerate() {
                b[a] = rational_to_f64(&centers[i]);
            }
            out.push((format!("hole {j} centre"), b));
        }
    }
    out
}

fn grid_checks(arr: &Arrangement, h: f64) -> (CheckRecord, CheckRecord) {
    let comp = arr.compiled();
    let w = arr.window();
    let mut closure = CheckRecord::new("ncd.closure").tolerance(2.0 * h);
    let mut conn = CheckRecord::new("ncd.connectivity").tolerance(h);
    let mut sections = Vec::new();
    for (name, base) in section_bases(arr) {
        let planes: Vec<Option<usize>> = if arr.n == 1 {
            vec![None]
        } else {
            (1..arr.n).map(Some).collect()
        };
        for k in planes {
            let scan = scan_section(comp, &w, &base, k, h);
            let plane = k.map_or("x1".to_string(), |k| format!("x1,x{}", k + 1));
            closure.samples += scan.closed;
            for p in &scan.closure_fail {
                closure.fail(Witness::float(
                    format!("closed point with no open point within 2 steps ({name}, plane {plane})"),
                    p,
                ));
            }
            conn.samples += 1;
            if scan.components != 1 {
                if scan.components == 0 {
                    conn.fail(Witness::float(
                        format!("no open grid point ({name}, plane {plane})"),
                        &base,
                    ));
                }
                for p in scan.component_points.iter().skip(1) {
                    conn.fail(Witness::float(
                        format!("extra component, {} in total ({name}, plane {plane})", scan.components),
                        p,
                    ));
                }
            }
            sections.push(json!({"base": name, "plane": plane, "components": scan.components}));
        }
    }
    conn.details = json!({ "grid_step": h, "sections": sections });
    closure.details = json!({ "grid_step": h });
    (closure, conn)
}

fn off_component(arr: &Arrangement, interior: &[Vec<f64>], random_lines: usize, seed: u64) -> CheckRecord {
    let comp = arr.compiled();
    let w = arr.window();
    let mut rec = CheckRecord::new("ncd.off_component").tolerance(ACTIVATION_TOL);
    let targets: Vec<usize> = (0..comp.l()).filter(|&j| !comp.desc[j].is_empty()).collect();
    if targets.is_empty() {
        rec.details = json!({"note": "every S_j is its whole zero set"});
        return rec;
    }
    let n = arr.n;
    let free: Vec<usize> = (0..n).collect();
    let results: Vec<(usize, Vec<(usize, Vec<f64>)>)> = interior
        .par_iter()
        .enumerate()
        .map(|(si, x)| {
            let mut rng = rng(sub_seed(seed, si as u64));
            let mut dirs: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let mut d = vec![0.0; n];
                    d[k] = 1.0;
                    d
                })
                .collect();
            for _ in 0..random_lines {
                let mut d = vec![0.0; n];
                random_direction(&mut rng, &free, &mut d);
                dirs.push(d);
            }
            let mut tested = 0;
            let mut bad = Vec::new();
            let mut buf = Vec::with_capacity(n);
            for d in &dirs {
                for &j in &targets {
                    let (a, b, c) = comp.line_quadratic(j, x, d, &mut buf);
                    for s in quadratic_roots(a, b, c) {
                        let z: Vec<f64> = x.iter().zip(d).map(|(p, q)| p + s * q).collect();
                        if !w.contains(&z) {
                            continue;
                        }
                        tested += 1;
                        if !comp.on_component(j, &z) && comp.is_closed_except(&z, ACTIVATION_TOL, &[j]) {
                            bad.push((j, z));
                        }
                    }
                }
            }
            (tested, bad)
        })
        .collect();
    for (tested, bad) in results {
        rec.samples += tested;
        for (j, z) in bad {
            rec.fail(Witness::float(
                format!("zero of f{} off S_{} inside D-bar", j + 1, j + 1),
                &z,
            ));
        }
    }
    rec
}

fn transversality(arr: &Arrangement, boundary: &[super::BoundarySample], seed: u64, sb: StrataBudget) -> CheckRecord {
    let comp = arr.compiled();
    let mut rec = CheckRecord::new("ncd.transversality").tolerance(RANK_TOL);
    let mut checked_boundary = 0;
    for b in boundary {
        let active: Vec<usize> = comp
            .active(&b.point, ACTIVATION_TOL)
            .into_iter()
            .filter(|&j| comp.on_component(j, &b.point))
            .collect();
        if active.is_empty() {
            continue;
        }
        checked_boundary += 1;
        match arr.check_transversality_at(&Point::Float(b.point.clone()), &active) {
            Ok(r) if r.pass => {}
            Ok(r) => rec.fail(
                Witness::float(
                    format!("boundary sample, active {:?}, rank {}", one_based(&active), r.rank),
                    &b.point,
                )
                .with_value(r.ratio.unwrap_or(0.0)),
            ),
            Err(e) => rec.fail(Witness::float(format!("error: {e}"), &b.point)),
        }
    }
    let strata = locate_strata(arr, boundary, seed, sb);
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    let mut exact_count = 0;
    for s in &strata {
        *by_size.entry(s.active.len()).or_default() += 1;
        let (pt, active) = match &s.exact {
            Some(q) => {
                exact_count += 1;
                let a = match arr.active_set(&Point::Exact(q.clone())) {
                    Ok(a) => a.indices,
                    Err(_) => s.active.clone(),
                };
                let on: Vec<usize> = a.into_iter().filter(|&j| comp.on_component(j, &s.point)).collect();
                (Point::Exact(q.clone()), on)
            }
            None => (Point::Float(s.point.clone()), s.active.clone()),
        };
        match arr.check_transversality_at(&pt, &active) {
            Ok(r) if r.pass => {
                if rec.witnesses.len() < 4 {
                    rec.witness(witness_of(&pt, format!("intersection of S{:?}", one_based(&active))));
                }
            }
            Ok(r) => rec.fail(witness_of(
                &pt,
                format!(
                    "intersection of S{:?}: gradient rank {} < {}{}",
                    one_based(&active),
                    r.rank,
                    active.len(),
                    if r.zero_gradient.is_empty() {
                        String::new()
                    } else {
                        format!(", zero gradient of f{:?}", one_based(&r.zero_gradient))
                    }
                ),
            )),
            Err(e) => rec.fail(witness_of(&pt, format!("error: {e}"))),
        }
    }
    rec.samples = checked_boundary + strata.len();
    let sizes: BTreeMap<String, usize> = by_size.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    rec.details = json!({
        "boundary_points": checked_boundary,
        "located_intersection_points": strata.len(),
        "exact_points": exact_count,
        "points_by_active_count": sizes,
    });
    rec
}

pub(crate) fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|j| j + 1).collect()
}

fn witness_of(p: &Point, what: String) -> Witness {
    match p {
        Point::Exact(q) => Witness::exact(what, q),
        Point::Float(x) => Witness::float(what, x),
    }
}

/// Rational upper bound of `sqrt(r)`, exact when `r` is a perfect square.
pub(crate) fn sqrt_upper(r: &Rational) -> Rational {
    if let Some(s) = exact_sqrt(r) {
        return s;
    }
    let mut s =
        snap_f64(rational_to_f64(r).sqrt() * (1.0 + 1e-9), 1 << 30, 1e-6).unwrap_or_else(|| r + Rational::one());
    while &(&s * &s) < r {
        s = &s * Rational::new(11.into(), 10.into());
    }
    s
}

/// Minimum of `f` over a box is attained at a vertex when `f` is concave in
/// each variable separately (degree at most 2, no positive square terms).
pub(crate) fn vertex_minimal(f: &Polynomial) -> bool {
    f.degree() <= 2
        && f.terms().all(|(m, c)| {
            let e = m.exponents();
            !(e.contains(&2) && c.is_positive())
        })
}

/// Vertex values of `f` over the box `[lo, hi]` (only the support
/// coordinates vary); returns the first vertex with `f <= 0`.
pub(crate) fn box_vertex_violation(f: &Polynomial, lo: &[Rational], hi: &[Rational]) -> Option<Vec<Rational>> {
    let support: Vec<usize> = f.support().into_iter().collect();
    let mut x: Vec<Rational> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (a + b) / Rational::from_integer(2.into()))
        .collect();
    for mask in 0u64..(1u64 << support.len()) {
        for (bit, &k) in support.iter().enumerate() {
            x[k] = if mask >> bit & 1 == 1 {
                hi[k].clone()
            } else {
                lo[k].clone()
            };
        }
        match f.eval(&x) {
            Ok(v) if v.is_positive() => {}
            _ => return Some(x.clone()),
        }
    }
    None
}

/// Exact bounding box of a full-dimensional ellipsoid primitive.
pub(crate) fn hole_box(p: &crate::geom::Primitive) -> Option<(Vec<Rational>, Vec<Rational>, Vec<Rational>)> {
    let Metadata::Ellipsoid {
        centers,
        squared_semi_axes,
        ..
    } = &p.metadata
    else {
        return None;
    };
    let n = p.ambient_dim();
    let mut lo = vec![Rational::zero(); n];
    let mut hi = vec![Rational::zero(); n];
    let mut c = vec![Rational::zero(); n];
    if p.axes.len() != n {
        return None;
    }
    for (i, &a) in p.axes.iter().enumerate() {
        let s = sqrt_upper(&squared_semi_axes[i]);
        lo[a] = &centers[i] - &s;
        hi[a] = &centers[i] + &s;
        c[a] = centers[i].clone();
    }
    Some((c, lo, hi))
}

/// Exact certificate that every ellipsoid hole is strictly inside all other
/// constraints and that holes are pairwise disjoint (bounding boxes
/// separated in some coordinate). Failures come with a boundary point of
/// the hole violating or touching another constraint when one is found.
pub fn certify_holes(arr: &Arrangement) -> CheckRecord {
    let mut rec = CheckRecord::new("ncd.hole_separation").tolerance(0.0);
    let holes: Vec<usize> = (0..arr.l())
        .filter(|&j| arr.primitives[j].kind == PrimitiveKind::EllipsoidHole)
        .collect();
    let boxes: Vec<_> = holes.iter().map(|&j| hole_box(&arr.primitives[j])).collect();
    for (hi_idx, &h) in holes.iter().enumerate() {
        let Some((_, lo, hi)) = &boxes[hi_idx] else {
            rec.fail(Witness::float(
                format!("hole f{} is not full-dimensional; cannot certify", h + 1),
                &[],
            ));
            continue;
        };
        for (k, p) in arr.primitives.iter().enumerate() {
            if k == h {
                continue;
            }
            rec.samples += 1;
            if p.kind == PrimitiveKind::EllipsoidHole {
                let o = holes.iter().position(|&x| x == k).unwrap();
                if o < hi_idx {
                    continue;
                }
                let separated = match &boxes[o] {
                    Some((_, lo2, hi2)) => (0..arr.n).any(|a| hi[a] < lo2[a] || hi2[a] < lo[a]),
                    None => false,
                };
                if !separated {
                    let w = hole_boundary_witness(arr, h, k)
                        .unwrap_or_else(|| Witness::float("bounding boxes overlap", &[]));
                    rec.fail(Witness {
                        what: format!("holes f{} and f{} not separated: {}", h + 1, k + 1, w.what),
                        ..w
                    });
                }
                continue;
            }
            let certified = vertex_minimal(&p.f) && box_vertex_violation(&p.f, lo, hi).is_none();
            if !certified {
                let w = hole_boundary_witness(arr, h, k).unwrap_or_else(|| {
                    let v = box_vertex_violation(&p.f, lo, hi).unwrap_or_else(|| lo.clone());
                    Witness::exact("no certificate; box vertex", &v)
                });
                rec.fail(Witness {
                    what: format!("hole f{} meets constraint f{}: {}", h + 1, k + 1, w.what),
                    ..w
                });
            }
        }
    }
    if holes.is_empty() {
        rec.details = json!({"note": "no holes"});
    } else {
        rec.details = json!({"holes": one_based(&holes)});
    }
    rec
}

/// A point on the boundary of hole `h` where constraint `k` is `<= 0`:
/// axis extremes first (exact when the semi-axes are rational), then 512
/// deterministic directions.
fn hole_boundary_witness(arr: &Arrangement, h: usize, k: usize) -> Option<Witness> {
    let p = &arr.primitives[h];
    let Metadata::Ellipsoid {
        centers,
        squared_semi_axes,
        ..
    } = &p.metadata
    else {
        return None;
    };
    let n = arr.n;
    let fk = &arr.primitives[k].f;
    let mut c = vec![Rational::zero(); n];
    for (i, &a) in p.axes.iter().enumerate() {
        c[a] = centers[i].clone();
    }
    for (i, &a) in p.axes.iter().enumerate() {
        let Some(s) = exact_sqrt(&squared_semi_axes[i]) else {
            continue;
        };
        for sign in [1, -1] {
            let mut x = c.clone();
            x[a] = &centers[i] + Rational::from_integer(sign.into()) * &s;
            if let Ok(v) = fk.eval(&x) {
                if !v.is_positive() {
                    return Some(Witness::exact(format!("f{} = {} at hole axis extreme", k + 1, v), &x));
                }
            }
        }
    }
    let comp = arr.compiled();
    let cf: Vec<f64> = c.iter().map(rational_to_f64).collect();
    let rf: Vec<f64> = squared_semi_axes.iter().map(|r| rational_to_f64(r).sqrt()).collect();
    let mut g = rng(sub_seed(0x401e, (h * 1000 + k) as u64));
    let free: Vec<usize> = (0..p.axes.len()).collect();
    let mut u = vec![0.0; p.axes.len()];
    for _ in 0..512 {
        random_direction(&mut g, &free, &mut u);
        let mut x = cf.clone();
        for (i, &a) in p.axes.iter().enumerate() {
            x[a] += rf[i] * u[i];
        }
        let v = comp.f[k].eval(&x);
        if v <= 0.0 {
            return Some(Witness::float(format!("f{} = {v:e} on hole boundary", k + 1), &x).with_value(v));
        }
    }
    None
}

impl Report {
    /// Verdict of the named check, `Fail` if absent.
    pub fn verdict_of(&self, id: &str) -> Verdict {
        self.check(id).map_or(Verdict::Fail, |c| c.verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::tests::unit_square;
    use crate::geom::{ellipsoid, hyperbola_region, HyperbolaVariant, Orientation};
    use crate::poly::{int, rat};

    fn quick() -> NcdBudget {
        NcdBudget {
            interior_samples: 150,
            boundary_per_primitive: 8,
            grid_step: 0.05,
            ..NcdBudget::default()
        }
    }

    #[test]
    fn square_passes() {
        let r = check_ncd(&unit_square(), &quick(), 1);
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn tangent_discs_fail_transversality_exactly() {
        let disc = |c: i64| ellipsoid(vec![int(c), int(0)], vec![int(1), int(1)], Orientation::Body).unwrap();
        let a = Arrangement::new_unchecked(2, vec![disc(0), disc(2)], vec![int(1), int(0)], "t").unwrap();
        let r = check_ncd(&a, &quick(), 1);
        let t = r.check("ncd.transversality").unwrap();
        assert_eq!(t.verdict, Verdict::Fail);
        let w = &t.counterexamples[0];
        assert_eq!(w.point, vec![1.0, 0.0]);
        assert!(w.exact.is_some());
    }

    #[test]
    fn dangling_branch_fails_off_component() {
        let prims = vec![
            hyperbola_region(HyperbolaVariant::RightOf, int(0), int(0), int(-1)).unwrap(),
            hyperbola_region(HyperbolaVariant::LeftOf, int(1), int(0), int(1)).unwrap(),
        ];
        let a = Arrangement::new(2, prims, vec![rat(1, 2), int(0)], "dangling").unwrap();
        let r = check_ncd(&a, &quick(), 1);
        let off = r.check("ncd.off_component").unwrap();
        assert_eq!(off.verdict, Verdict::Fail, "{}", r.to_json());
        let z = &off.counterexamples[0].point;
        assert!(a.compiled().is_closed(z, 1e-9));
    }

    #[test]
    fn vertex_rule() {
        assert!(vertex_minimal(
            &Polynomial::parse("1 - x1^2 - x2^2 + x1*x2", 2).unwrap()
        ));
        assert!(!vertex_minimal(&Polynomial::parse("x1^2 - 1", 2).unwrap()));
        assert_eq!(sqrt_upper(&rat(1, 4)), rat(1, 2));
        let s = sqrt_upper(&int(2));
        assert!(&s * &s >= int(2) && rational_to_f64(&s) < 1.4143);
    }
}
