use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::sample::{rng, sub_seed};
use super::{Arrangement, BoundarySample, Compiled, ACTIVATION_TOL};
use crate::linalg::min_norm_solve;
use crate::poly::{snap_f64, Rational};
use num_traits::{Signed, Zero};

/// A located point of `D-bar` on the intersection of the `S_j`, `j` in
/// `active`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub active: Vec<usize>,
    pub point: Vec<f64>,
    /// Rational snap of `point` that satisfies every active equation exactly
    /// and lies in `D-bar` exactly, when one was found.
    pub exact: Option<Vec<Rational>>,
}

const SOLVE_TOL: f64 = 1e-11;

fn residual(comp: &Compiled, set: &[usize], x: &[f64]) -> Vec<f64> {
    set.iter().map(|&j| comp.f[j].eval(x)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Gauss-Newton with minimum-norm steps and backtracking for
/// `f_j(x) = 0, j in set`, started at `x0`.
pub fn solve_on(comp: &Compiled, set: &[usize], x0: &[f64], max_iter: usize) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut r = residual(comp, set, &x);
    let mut norm = max_abs(&r);
    for _ in 0..max_iter {
        if norm < SOLVE_TOL {
            return Some(x);
        }
        let jac: Vec<Vec<f64>> = set.iter().map(|&j| comp.gradient(j, &x)).collect();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = min_norm_solve(&jac, &rhs)?;
        let mut t = 1.0;
        loop {
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let rn = residual(comp, set, &xn);
            let nn = max_abs(&rn);
            if nn < norm {
                x = xn;
                r = rn;
                norm = nn;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                return (norm < SOLVE_TOL).then_some(x);
            }
        }
    }
    (norm < SOLVE_TOL).then_some(x)
}

/// Active constraints at `x` whose component descriptor holds.
fn active_on_components(comp: &Compiled, x: &[f64]) -> Vec<usize> {
    comp.active(x, ACTIVATION_TOL)
        .into_iter()
        .filter(|&j| comp.on_component(j, x))
        .collect()
}

/// Tries rational snaps of `x` at a few denominator scales; keeps the first
/// that zeroes every constraint in `active` exactly and lies in `D-bar`.
pub(crate) fn snap_exact(arr: &Arrangement, x: &[f64], active: &[usize]) -> Option<Vec<Rational>> {
    for (den, tol) in [(64, 1e-5), (5040, 1e-8), (1 << 20, 1e-10)] {
        let q: Option<Vec<Rational>> = x.iter().map(|&v| snap_f64(v, den, tol * v.abs().max(1.0))).collect();
        let Some(q) = q else { continue };
        let ok = arr.primitives.iter().enumerate().all(|(j, p)| match p.f.eval(&q) {
            Ok(v) if active.contains(&j) => v.is_zero(),
            Ok(v) => !v.is_negative(),
            Err(_) => false,
        });
        if ok {
            return Some(q);
        }
    }
    None
}

pub(crate) fn make_stratum(arr: &Arrangement, x: Vec<f64>, required: &[usize]) -> Option<Stratum> {
    let comp = arr.compiled();
    let w = arr.window();
    let span: Vec<f64> = w.hi.iter().zip(&w.lo).map(|(h, l)| h - l).collect();
    let roomy = x
        .iter()
        .enumerate()
        .all(|(k, v)| *v >= w.lo[k] - span[k] && *v <= w.hi[k] + span[k]);
    if !roomy || !comp.is_closed(&x, ACTIVATION_TOL) {
        return None;
    }
    let active = active_on_components(comp, &x);
    if !required.iter().all(|j| active.contains(j)) {
        return None;
    }
    let exact = snap_exact(arr, &x, &active);
    Some(Stratum {
        active,
        point: x,
        exact,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct StrataBudget {
    /// Starts per pair taken from boundary samples of each member.
    pub boundary_starts: usize,
    /// Uniform starts in the window per pair.
    pub random_starts: usize,
    pub max_iter: usize,
}

impl Default for StrataBudget {
    fn default() -> Self {
        StrataBudget {
            boundary_starts: 3,
            random_starts: 2,
            max_iter: 60,
        }
    }
}

fn extend_chain(arr: &Arrangement, start: &Stratum, order: &[usize], max_iter: usize) -> Vec<Stratum> {
    let comp = arr.compiled();
    let mut cur = start.clone();
    let mut out = Vec::new();
    for &k in order {
        if cur.active.contains(&k) {
            continue;
        }
        let mut set = cur.active.clone();
        set.push(k);
        if let Some(x) = solve_on(comp, &set, &cur.point, max_iter) {
            if let Some(s) = make_stratum(arr, x, &set) {
                out.push(s.clone());
                cur = s;
            }
        }
    }
    out
}

/// Pairwise multi-start location of `S_i ∩ S_j ∩ D-bar`, followed by greedy
/// descent into deeper intersections (ascending and shuffled orders).
/// Failing to find a stratum means "not found", never "empty".
pub fn locate_strata(arr: &Arrangement, boundary: &[BoundarySample], seed: u64, budget: StrataBudget) -> Vec<Stratum> {
    let comp = arr.compiled();
    let l = comp.l();
    let w = arr.window();
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| ((i + 1)..l).map(move |j| (i, j))).collect();
    let by_prim: Vec<Vec<&Vec<f64>>> = (0..l)
        .map(|j| boundary.iter().filter(|b| b.primitive == j).map(|b| &b.point).collect())
        .collect();
    let nearest = |on: usize, other: usize, k: usize| -> Vec<Vec<f64>> {
        let mut v: Vec<(f64, &Vec<f64>)> = by_prim[on].iter().map(|p| (comp.f[other].eval(p).abs(), *p)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter().take(k).map(|(_, p)| p.clone()).collect()
    };
    let found: Vec<Vec<Stratum>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pi, &(i, j))| {
            let mut rng = rng(sub_seed(seed, pi as u64));
            let mut starts = nearest(i, j, budget.boundary_starts);
            starts.extend(nearest(j, i, budget.boundary_starts));
            let extra = if starts.is_empty() {
                2 * budget.boundary_starts
            } else {
                0
            };
            for _ in 0..budget.random_starts + extra {
                starts.push((0..arr.n).map(|k| rng.random_range(w.lo[k]..=w.hi[k])).collect());
            }
            let mut local: Vec<Stratum> = Vec::new();
            for x0 in starts {
                let Some(x) = solve_on(comp, &[i, j], &x0, budget.max_iter) else {
                    continue;
                };
                let Some(s) = make_stratum(arr, x, &[i, j]) else {
                    continue;
                };
                if local.iter().any(|o| o.active == s.active) {
                    continue;
                }
                local.push(s);
            }
            let mut deeper = Vec::new();
            for s in &local {
                let asc: Vec<usize> = (0..l).collect();
                deeper.extend(extend_chain(arr, s, &asc, budget.max_iter));
                let mut shuffled = asc;
                shuffled.shuffle(&mut rng);
                deeper.extend(extend_chain(arr, s, &shuffled, budget.max_iter));
            }
            local.extend(deeper);
            local
        })
        .collect();
    found.into_iter().flatten().collect()
}
