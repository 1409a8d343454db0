//! Case machines turning interval data `(t_1 < ... < t_l, labels)` into an
//! explicit NCD whose height function `x1` has the prescribed level-set
//! behaviour: label 0 intervals get compact connected preimages, label 1
//! intervals non-compact connected ones.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arrangement::ncd::{box_vertex_violation, vertex_minimal};
use crate::arrangement::{certify_holes, Arrangement};
use crate::error::{invalid, Error, Result};
use crate::geom::{
    ellipsoid, embed, embed_plane_primitive, half_plane, region_r, Orientation, Primitive, RegionKind, Side,
};
use crate::poly::{
    int, rat, rational_to_f64, rationals_from_json, rationals_to_json, snap_f64, Rational, RationalJson,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Rectangles, strips, line/hyperbola regions and hyperbola corridors.
    Mt2,
    /// Ellipse-based variant; `l = 3` is not available.
    Mt3,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Mt2 => "mt2",
            Variant::Mt3 => "mt3",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mt2" => Ok(Variant::Mt2),
            "mt3" => Ok(Variant::Mt3),
            _ => Err(invalid(format!("unknown variant {s:?} (expected mt2 or mt3)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionInput {
    pub t: Vec<Rational>,
    /// `labels[j]` belongs to the interval `(t_{j+1}, t_{j+2})` (1-based t).
    pub labels: Vec<u8>,
    pub variant: Variant,
    /// Half-width `R` of the strip `|x_n| < R`.
    pub strip_half_width: Rational,
    /// Minor hole radius as a fraction of the certified clearance.
    pub hole_shrink: Rational,
}

impl ConstructionInput {
    pub fn new(t: Vec<Rational>, labels: Vec<u8>, variant: Variant) -> Result<Self> {
        let input = ConstructionInput {
            t,
            labels,
            variant,
            strip_half_width: int(1),
            hole_shrink: rat(1, 4),
        };
        input.validate()?;
        Ok(input)
    }

    pub fn l(&self) -> usize {
        self.t.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.l();
        if l < 2 {
            return Err(invalid(format!("need at least two t-values, got {l}")));
        }
        if let Some(w) = self.t.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "t-values must be strictly increasing ({} is followed by {})",
                w[0], w[1]
            )));
        }
        if self.labels.len() != l - 1 {
            return Err(invalid(format!(
                "expected {} labels for {l} t-values, got {}",
                l - 1,
                self.labels.len()
            )));
        }
        if let Some(b) = self.labels.iter().find(|&&b| b > 1) {
            return Err(invalid(format!("labels must be 0 or 1, got {b}")));
        }
        if self.variant == Variant::Mt3 && l == 3 {
            return Err(invalid("MT3 requires l ≠ 3"));
        }
        if !self.strip_half_width.is_positive() {
            return Err(invalid("strip half-width R must be positive"));
        }
        if !self.hole_shrink.is_positive() || self.hole_shrink >= Rational::one() {
            return Err(invalid("hole shrink factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalExpectation {
    pub lo: Rational,
    pub hi: Rational,
    pub label: u8,
    pub bounded: bool,
}

/// What the verifier should find: image `[t_1, t_l]`, singular values
/// `{t_j}`, and slice boundedness per interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectedProfile {
    pub image: [Rational; 2],
    pub singular_values: Vec<Rational>,
    pub intervals: Vec<IntervalExpectation>,
}

impl ExpectedProfile {
    pub fn from_labels(t: &[Rational], labels: &[u8]) -> Self {
        ExpectedProfile {
            image: [t[0].clone(), t[t.len() - 1].clone()],
            singular_values: t.to_vec(),
            intervals: t
                .windows(2)
                .zip(labels)
                .map(|(w, &label)| IntervalExpectation {
                    lo: w[0].clone(),
                    hi: w[1].clone(),
                    label,
                    bounded: label == 0,
                })
                .collect(),
        }
    }
}

pub fn predicted_profile(input: &ConstructionInput) -> ExpectedProfile {
    ExpectedProfile::from_labels(&input.t, &input.labels)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalJson {
    pub lo: RationalJson,
    pub hi: RationalJson,
    pub label: u8,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedProfileJson {
    pub image: Vec<RationalJson>,
    pub singular_values: Vec<RationalJson>,
    pub intervals: Vec<IntervalJson>,
}

impl From<&ExpectedProfile> for ExpectedProfileJson {
    fn from(e: &ExpectedProfile) -> Self {
        ExpectedProfileJson {
            image: rationals_to_json(&e.image),
            singular_values: rationals_to_json(&e.singular_values),
            intervals: e
                .intervals
                .iter()
                .map(|i| IntervalJson {
                    lo: (&i.lo).into(),
                    hi: (&i.hi).into(),
                    label: i.label,
                    bounded: i.bounded,
                })
                .collect(),
        }
    }
}

impl ExpectedProfileJson {
    pub fn to_profile(&self) -> Result<ExpectedProfile> {
        let image: [Rational; 2] = rationals_from_json(&self.image)?
            .try_into()
            .map_err(|_| Error::Schema("expected.image needs two values".into()))?;
        Ok(ExpectedProfile {
            image,
            singular_values: rationals_from_json(&self.singular_values)?,
            intervals: self
                .intervals
                .iter()
                .map(|i| {
                    Ok(IntervalExpectation {
                        lo: i.lo.to_rational()?,
                        hi: i.hi.to_rational()?,
                        label: i.label,
                        bounded: i.bounded,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}

fn p2(x: &Rational, y: &Rational) -> [Rational; 2] {
    [x.clone(), y.clone()]
}

fn half(a: &Rational, b: &Rational) -> Rational {
    (a + b) / int(2)
}

/// Builds the arrangement for the requested case and attaches the
/// expected profile.
pub fn build(input: &ConstructionInput) -> Result<Arrangement> {
    input.validate()?;
    let t = &input.t;
    let l = input.l();
    let (zero, one) = (Rational::zero(), Rational::one());
    let (n, prims, seed, case): (usize, Vec<Primitive>, Vec<Rational>, &str) = match (input.variant, l) {
        (Variant::Mt2, 2) => {
            let mut prims = vec![
                half_plane(p2(&t[0], &zero), p2(&t[0], &one), Side::Plus)?,
                half_plane(p2(&t[0], &zero), p2(&t[1], &zero), Side::Plus)?,
                half_plane(p2(&t[1], &zero), p2(&t[1], &one), Side::Minus)?,
            ];
            let case = if input.labels[0] == 0 {
                prims.push(half_plane(p2(&t[0], &one), p2(&t[1], &one), Side::Minus)?);
                "mt2/l2/rectangle"
            } else {
                "mt2/l2/strip"
            };
            (2, prims, vec![half(&t[0], &t[1]), rat(1, 2)], case)
        }
        (Variant::Mt2, 3) => mt2_three(t, &input.labels)?,
        (Variant::Mt3, 2) => {
            let c = half(&t[0], &t[1]);
            let r1 = {
                let h = (&t[1] - &t[0]) / int(2);
                &h * &h
            };
            if input.labels[0] == 0 {
                let e = ellipsoid(vec![c.clone(), zero.clone()], vec![r1, one.clone()], Orientation::Body)?;
                (2, vec![e], vec![c, zero], "mt3/l2/ellipse")
            } else {
                let e = ellipsoid(vec![c.clone()], vec![r1], Orientation::Body)?;
                let cyl = embed(&e, 2, &[0])?;
                (2, vec![cyl], vec![c, zero], "mt3/l2/interval-cylinder")
            }
        }
        (Variant::Mt3, _) if input.labels.iter().all(|&b| b == 0) => {
            let c = half(&t[0], &t[l - 1]);
            let h = (&t[l - 1] - &t[0]) / int(2);
            let body = ellipsoid(
                vec![c, zero.clone(), zero.clone()],
                vec![&h * &h, one.clone(), one.clone()],
                Orientation::Body,
            )?;
            let seed = vec![half(&t[0], &t[1]), zero.clone(), zero.clone()];
            (3, vec![body], seed, "mt3/all-zero")
        }
        _ => general(input)?,
    };
    let holes_needed = match case {
        "mt2/general" | "mt3/mixed" | "mt3/all-zero" => l.saturating_sub(3),
        _ => 0,
    };
    let mut prims = prims;
    let d1_len = prims.len();
    for j in 1..=holes_needed {
        let (centers, axes) = choose_hole_geometry(&prims[..d1_len], &prims[d1_len..], &seed, input, j)?;
        prims.push(ellipsoid(centers, axes, Orientation::Hole)?);
    }
    let arr = Arrangement::new(n, prims, seed, case)
        .map_err(|e| Error::Construction(format!("{case}: {e}")))?
        .with_data(t.clone(), input.labels.clone(), Some(input.variant))
        .with_expected(predicted_profile(input));
    if holes_needed > 0 {
        let cert = certify_holes(&arr);
        if !cert.passed() {
            return Err(Error::Construction(format!(
                "hole certificate failed: {}",
                cert.counterexamples
                    .first()
                    .map_or("unknown".to_string(), |w| w.what.clone())
            )));
        }
    }
    Ok(arr)
}

type CaseOut = (usize, Vec<Primitive>, Vec<Rational>, &'static str);

fn mt2_three(t: &[Rational], labels: &[u8]) -> Result<CaseOut> {
    let (zero, one) = (Rational::zero(), Rational::one());
    let s1 = [t[0].clone(), t[1].clone(), t[2].clone()];
    match (labels[0], labels[1]) {
        (0, 0) => Ok((
            2,
            vec![
                half_plane(p2(&t[0], &zero), p2(&t[0], &one), Side::Plus)?,
                half_plane(p2(&t[0], &zero), p2(&t[1], &zero), Side::Plus)?,
                half_plane(p2(&t[1], &zero), p2(&t[2], &one), Side::Plus)?,
                half_plane(p2(&t[0], &one), p2(&t[2], &one), Side::Minus)?,
            ],
            vec![half(&t[0], &t[1]), rat(1, 2)],
            "mt2/l3/trapezoid",
        )),
        (1, 1) => Ok((
            2,
            vec![
                half_plane(p2(&t[0], &zero), p2(&t[0], &one), Side::Plus)?,
                half_plane(p2(&t[0], &one), p2(&t[1], &zero), Side::Plus)?,
                half_plane(p2(&t[1], &zero), p2(&t[2], &one), Side::Plus)?,
                half_plane(p2(&t[2], &zero), p2(&t[2], &one), Side::Minus)?,
            ],
            vec![half(&t[0], &t[1]), one],
            "mt2/l3/v-shape",
        )),
        (1, 0) => {
            let s2 = Rational::one() / (&t[2] - &t[1]);
            Ok((
                2,
                region_r(RegionKind::Plus, &s1, &s2, &one)?,
                vec![half(&t[0], &t[1]), rat(1, 2)],
                "mt2/l3/r-plus",
            ))
        }
        _ => {
            let s2 = Rational::one() / (&t[1] - &t[0]);
            Ok((
                2,
                region_r(RegionKind::Minus, &s1, &s2, &one)?,
                vec![half(&t[1], &t[2]), rat(1, 2)],
                "mt2/l3/r-minus",
            ))
        }
    }
}

/// `D_1` of the general case: rectangle (MT2) or ellipse (MT3) in
/// `(x1, x2)`, one flat hyperbola corridor per label-1 interval in its own
/// coordinate, and the strip `|x_n| < R`. Holes are added by the caller.
fn general(input: &ConstructionInput) -> Result<CaseOut> {
    let t = &input.t;
    let l = input.l();
    let (zero, one) = (Rational::zero(), Rational::one());
    let corridors: Vec<usize> = (0..l - 1).filter(|&i| input.labels[i] == 1).collect();
    let lp = corridors.len();
    let n = lp + 3;
    let mut prims = Vec::new();
    let (case, x2_seed) = match input.variant {
        Variant::Mt2 => {
            for p in [
                half_plane(p2(&t[0], &zero), p2(&t[0], &one), Side::Plus)?,
                half_plane(p2(&t[0], &zero), p2(&t[l - 1], &zero), Side::Plus)?,
                half_plane(p2(&t[l - 1], &zero), p2(&t[l - 1], &one), Side::Minus)?,
                half_plane(p2(&t[0], &one), p2(&t[l - 1], &one), Side::Minus)?,
            ] {
                prims.push(embed(&p, n, &[0, 1])?);
            }
            ("mt2/general", rat(1, 2))
        }
        Variant::Mt3 => {
            let h = (&t[l - 1] - &t[0]) / int(2);
            let e = ellipsoid(
                vec![half(&t[0], &t[l - 1]), zero.clone()],
                vec![&h * &h, one.clone()],
                Orientation::Body,
            )?;
            prims.push(embed(&e, n, &[0, 1])?);
            ("mt3/mixed", zero.clone())
        }
    };
    for (j, &i) in corridors.iter().enumerate() {
        let region = region_r(RegionKind::Flat, &[t[i].clone(), t[i + 1].clone()], &zero, &one)?;
        for p in &region {
            prims.push(embed_plane_primitive(p, n, j + 2)?);
        }
    }
    let r = &input.strip_half_width;
    let neg_r = -r.clone();
    prims.push(embed_plane_primitive(
        &half_plane(p2(&zero, &neg_r), p2(&one, &neg_r), Side::Plus)?,
        n,
        n - 1,
    )?);
    prims.push(embed_plane_primitive(
        &half_plane(p2(&zero, r), p2(&one, r), Side::Minus)?,
        n,
        n - 1,
    )?);
    let mut seed = vec![zero.clone(); n];
    seed[0] = half(&t[0], &t[1]);
    seed[1] = x2_seed;
    for k in 0..lp {
        seed[k + 2] = Rational::one() / (int(2) * (&t[l - 1] - &t[0]));
    }
    Ok((n, prims, seed, case))
}

struct HoleFit<'a> {
    d1: Vec<crate::poly::CompiledPoly>,
    d1_supports: Vec<Vec<usize>>,
    previous: Vec<(Vec<f64>, Vec<f64>)>,
    x1: (f64, f64),
    _marker: std::marker::PhantomData<&'a ()>,
}

impl HoleFit<'_> {
    /// Whether the box `[x1 range] x prod [c_k - rho, c_k + rho]` has every
    /// `D_1` constraint positive at its vertices and is strictly separated
    /// from every previous hole box in some coordinate.
    fn feasible(&self, c: &[f64], rho: f64) -> bool {
        let n = c.len();
        let lo = |k: usize| if k == 0 { self.x1.0 } else { c[k] - rho };
        let hi = |k: usize| if k == 0 { self.x1.1 } else { c[k] + rho };
        for (f, sup) in self.d1.iter().zip(&self.d1_supports) {
            let mut x = c.to_vec();
            for mask in 0u32..(1 << sup.len()) {
                for (b, &k) in sup.iter().enumerate() {
                    x[k] = if mask >> b & 1 == 1 { hi(k) } else { lo(k) };
                }
                if f.eval(&x) <= 0.0 {
                    return false;
                }
            }
        }
        self.previous
            .iter()
            .all(|(plo, phi)| (0..n).any(|k| hi(k) < plo[k] || phi[k] < lo(k)))
    }

    fn margin(&self, c: &[f64]) -> f64 {
        if !self.feasible(c, 0.0) {
            return -1.0;
        }
        let (mut a, mut b) = (0.0, 4.0);
        if self.feasible(c, b) {
            return b;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.feasible(c, m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}

fn dyadic_floor(v: f64, den: i64) -> Rational {
    Rational::new(((v * den as f64).floor() as i64).into(), den.into())
}

/// Centre and squared semi-axes of hole `j` (1-based): x1-extent exactly
/// `[t_{j+1}, t_{j+2}]`, other centre coordinates by coordinate ascent of
/// the certified clearance, minor squared semi-axes `(shrink * clearance)^2`.
pub fn choose_hole_geometry(
    d1: &[Primitive],
    previous_holes: &[Primitive],
    seed: &[Rational],
    input: &ConstructionInput,
    j: usize,
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let t = &input.t;
    if j == 0 || j + 2 > t.len() {
        return Err(invalid(format!("hole index {j} out of range")));
    }
    let n = seed.len();
    let (a, b) = (&t[j], &t[j + 1]);
    let a1 = half(a, b);
    let r1 = {
        let h = (b - a) / int(2);
        &h * &h
    };
    let mut previous = Vec::new();
    for h in previous_holes {
        let (_, lo, hi) = crate::arrangement::ncd::hole_box(h)
            .ok_or_else(|| Error::Construction("previous hole is not full-dimensional".into()))?;
        previous.push((
            lo.iter().map(rational_to_f64).collect(),
            hi.iter().map(rational_to_f64).collect(),
        ));
    }
    let fit = HoleFit {
        d1: d1.iter().map(|p| crate::poly::CompiledPoly::new(&p.f)).collect(),
        d1_supports: d1.iter().map(|p| p.f.support().into_iter().collect()).collect(),
        previous,
        x1: (rational_to_f64(a), rational_to_f64(b)),
        _marker: std::marker::PhantomData,
    };
    let mut c: Vec<Rational> = seed.to_vec();
    c[0] = a1.clone();
    let to_f = |c: &[Rational]| -> Vec<f64> { c.iter().map(rational_to_f64).collect() };
    let hw = 12.0;
    let mut best = fit.margin(&to_f(&c));
    for _sweep in 0..3 {
        let before = best;
        for k in 1..n {
            let cf = to_f(&c);
            // feasible range of c_k along the axis at the pole segment midpoint
            let (mut lo, mut hi) = (-hw, hw);
            let d1c: Vec<_> = fit
                .d1
                .iter()
                .zip(&fit.d1_supports)
                .filter(|(_, s)| s.contains(&k))
                .collect();
            let ok = |v: f64| {
                let mut x = cf.clone();
                x[k] = v;
                d1c.iter().all(|(f, _)| f.eval(&x) > 0.0)
            };
            let steps = 960;
            let grid: Vec<f64> = (0..=steps).map(|i| -hw + 2.0 * hw * i as f64 / steps as f64).collect();
            let inside: Vec<f64> = grid.iter().copied().filter(|&v| ok(v)).collect();
            if let (Some(&l0), Some(&h0)) = (inside.first(), inside.last()) {
                lo = l0;
                hi = h0;
            }
            let mut cands: Vec<Rational> = (1..8)
                .map(|i| dyadic_floor(lo + (hi - lo) * i as f64 / 8.0, 256))
                .collect();
            cands.push(rat(1, 2));
            cands.push(int(1));
            cands.push(c[k].clone());
            let current = c[k].clone();
            let mut pick: Option<(f64, Rational)> = None;
            for q in cands {
                let mut trial = cf.clone();
                trial[k] = rational_to_f64(&q);
                let m = fit.margin(&trial);
                let better = match &pick {
                    None => true,
                    Some((bm, bq)) => {
                        m > *bm + 1e-12 || ((m - *bm).abs() <= 1e-12 && (&q - &current).abs() < (bq - &current).abs())
                    }
                };
                if better {
                    pick = Some((m, q));
                }
            }
            if let Some((m, q)) = pick {
                if m > best + 1e-12 || (m - best).abs() <= 1e-12 {
                    best = best.max(m);
                    c[k] = q;
                }
            }
        }
        if best <= before + 1e-12 && best > 0.0 {
            break;
        }
    }
    let margin = fit.margin(&to_f(&c));
    if !(margin > 0.0) {
        return Err(Error::Construction(format!(
            "no feasible centre for hole {j} over [{a}, {b}]"
        )));
    }
    let snapped = match snap_f64(margin, 64, 1e-7) {
        Some(q) if q.is_positive() => q,
        _ => dyadic_floor(margin, 1024),
    };
    if !snapped.is_positive() {
        return Err(Error::Construction(format!("hole {j} clearance {margin} too small")));
    }
    let rho = &input.hole_shrink * &snapped;
    let mut axes = vec![r1];
    axes.extend((1..n).map(|_| &rho * &rho));
    let centres = c;
    // exact box certificate against D_1 (hole-vs-hole is certified on the
    // finished arrangement)
    let box_lo: Vec<Rational> = (0..n)
        .map(|k| if k == 0 { a.clone() } else { &centres[k] - &rho })
        .collect();
    let box_hi: Vec<Rational> = (0..n)
        .map(|k| if k == 0 { b.clone() } else { &centres[k] + &rho })
        .collect();
    for p in d1 {
        if !vertex_minimal(&p.f) || box_vertex_violation(&p.f, &box_lo, &box_hi).is_some() {
            return Err(Error::Construction(format!(
                "hole {j} box is not certified inside {}",
                p.f
            )));
        }
    }
    Ok((centres, axes))
}
