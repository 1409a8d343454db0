use num_traits::Zero;

use crate::arrangement::sample::sub_seed;
use crate::arrangement::strata::StrataBudget;
use crate::arrangement::{
    locate_strata, sample_boundary, sample_region, Arrangement, BoundarySample, Membership, Stratum,
};
use crate::error::Result;
use crate::geom::Metadata;
use crate::poly::{exact_sqrt, Rational};

/// An exact point of `D-bar` worth testing: snapped intersection points,
/// ellipsoid poles along `x1`, line corners and end faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub point: Vec<Rational>,
    pub source: String,
}

/// Samples shared by the checks of one suite run.
#[derive(Clone, Debug)]
pub struct Evidence {
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<BoundarySample>,
    pub strata: Vec<Stratum>,
    pub candidates: Vec<Candidate>,
}

const BOUNDARY_PER_PRIMITIVE: usize = 16;

impl Evidence {
    pub fn gather(arr: &Arrangement, interior_count: usize, seed: u64) -> Result<Self> {
        let interior = sample_region(arr, interior_count.max(1), sub_seed(seed, 0))?;
        let boundary = sample_boundary(arr, &interior, BOUNDARY_PER_PRIMITIVE, sub_seed(seed, 1));
        let strata = locate_strata(arr, &boundary, sub_seed(seed, 2), StrataBudget::default());
        let candidates = exact_candidates(arr, &strata);
        Ok(Evidence {
            interior,
            boundary,
            strata,
            candidates,
        })
    }
}

fn in_closure(arr: &Arrangement, x: &[Rational]) -> bool {
    matches!(arr.membership(x), Ok(Membership::Interior | Membership::Boundary(_)))
}

/// Exact candidates in `D-bar`, deduplicated, in a fixed order.
pub fn exact_candidates(arr: &Arrangement, strata: &[Stratum]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut push = |point: Vec<Rational>, source: String| {
        if in_closure(arr, &point) && !out.iter().any(|c| c.point == point) {
            out.push(Candidate { point, source });
        }
    };
    let seed = &arr.seed_point;
    for (j, p) in arr.primitives.iter().enumerate() {
        let Metadata::Ellipsoid {
            centers,
            squared_semi_axes,
            ..
        } = &p.metadata
        else {
            continue;
        };
        let Some(i0) = p.axes.iter().position(|&a| a == 0) else {
            continue;
        };
        let Some(s) = exact_sqrt(&squared_semi_axes[i0]) else {
            continue;
        };
        let mut base = seed.clone();
        for (i, &a) in p.axes.iter().enumerate() {
            base[a] = centers[i].clone();
        }
        for (sign, tag) in [(-1, "low"), (1, "high")] {
            let mut x = base.clone();
            x[0] = &centers[i0] + Rational::from_integer(sign.into()) * &s;
            push(x, format!("pole ({tag}) of f{}", j + 1));
        }
    }
    // corners of pairs of linear constraints in a common (x1, x_k) plane
    let linear: Vec<(usize, usize)> = arr
        .primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| p.f.degree() == 1)
        .filter_map(|(j, p)| {
            let s: Vec<usize> = p.f.support().into_iter().collect();
            match s.as_slice() {
                [0, k] => Some((j, *k)),
                [k] if *k != 0 => Some((j, *k)),
                _ => None,
            }
        })
        .collect();
    let vertical: Vec<usize> = arr
        .primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| p.f.degree() == 1 && p.f.support().into_iter().eq([0]))
        .map(|(j, _)| j)
        .collect();
    let coef = |j: usize, k: usize| -> Rational {
        let mut e = vec![0u32; arr.n];
        e[k] = 1;
        arr.primitives[j].f.coefficient(&e)
    };
    let konst = |j: usize| arr.primitives[j].f.constant_term();
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (a, &(i, k)) in linear.iter().enumerate() {
        for &(j, k2) in &linear[a + 1..] {
            if k == k2 {
                pairs.push((i, j, k));
            }
        }
        for &v in &vertical {
            pairs.push((i, v, k));
        }
    }
    for (i, j, k) in pairs {
        // a1 x1 + ak xk + c = 0 for both
        let (a1, ak, c1) = (coef(i, 0), coef(i, k), konst(i));
        let (b1, bk, c2) = (coef(j, 0), coef(j, k), konst(j));
        let det = &a1 * &bk - &ak * &b1;
        if det.is_zero() {
            continue;
        }
        let x1 = (&ak * &c2 - &bk * &c1) / &det;
        let xk = (&b1 * &c1 - &a1 * &c2) / &det;
        let mut x = seed.clone();
        x[0] = x1;
        x[k] = xk;
        push(x, format!("corner of f{} and f{}", i + 1, j + 1));
    }
    if let (Some(lo), Some(hi)) = (arr.t_values.first(), arr.t_values.last()) {
        for (t, tag) in [(lo, "t_1"), (hi, "t_l")] {
            let mut x = seed.clone();
            x[0] = t.clone();
            push(x, format!("seed moved to x1 = {tag}"));
        }
    }
    for s in strata {
        if let Some(q) = &s.exact {
            let names: Vec<String> = s.active.iter().map(|j| format!("f{}", j + 1)).collect();
            push(q.clone(), format!("snapped intersection of {}", names.join(", ")));
        }
    }
    out
}
