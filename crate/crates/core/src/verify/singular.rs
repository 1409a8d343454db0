//! Critical values of `f = x1` on `M`. A point over `x` in `D-bar` is
//! critical iff `e1` lies in the span of the gradients of the constraints
//! vanishing at `x`: blocks with `y_j != 0` force their multiplier to zero.

use rayon::prelude::*;

use super::Evidence;
use crate::arrangement::sample::sub_seed;
use crate::arrangement::strata::snap_exact;
use crate::arrangement::{Arrangement, ACTIVATION_TOL};
use crate::lift::LiftedManifold;
use crate::linalg::{exact_in_span, min_norm_solve, span_residual};
use crate::poly::{rational_to_f64, CompiledPoly, Rational};
use crate::report::Witness;

/// Span membership threshold for float points.
pub const SPAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SingularHit {
    pub value: f64,
    pub exact: Option<Rational>,
    pub point: Vec<f64>,
    pub exact_point: Option<Vec<Rational>>,
    pub active: Vec<usize>,
    pub source: String,
}

impl SingularHit {
    pub fn display_value(&self) -> String {
        match &self.exact {
            Some(q) => q.to_string(),
            None => format!("{:.9}", self.value),
        }
    }

    pub fn witness(&self, what: String) -> Witness {
        let w = match &self.exact_point {
            Some(q) => Witness::exact(format!("{what} ({})", self.source), q),
            None => Witness::float(format!("{what} ({})", self.source), &self.point),
        };
        w.with_value(self.value)
    }
}

/// Clustered critical values (one representative per cluster, exact when
/// any member is exact) and the number of base points examined.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularScan {
    pub values: Vec<SingularHit>,
    pub points_tested: usize,
}

impl SingularScan {
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|h| h.value).collect()
    }
}

pub fn detect_singular_values(lm: &LiftedManifold, budget: usize, seed: u64) -> crate::Result<SingularScan> {
    let ev = Evidence::gather(&lm.arrangement, budget, sub_seed(seed, 0))?;
    Ok(scan_with(lm, &ev))
}

fn exact_hit(arr: &Arrangement, x: &[Rational], source: &str) -> Option<SingularHit> {
    let mut active = Vec::new();
    let mut grads = Vec::new();
    for (j, p) in arr.primitives.iter().enumerate() {
        let v = p.f.eval(x).ok()?;
        if num_traits::Signed::is_negative(&v) {
            return None;
        }
        if num_traits::Zero::is_zero(&v) {
            active.push(j);
            grads.push(
                p.f.gradient()
                    .iter()
                    .map(|g| g.eval(x))
                    .collect::<crate::Result<Vec<_>>>()
                    .ok()?,
            );
        }
    }
    let mut e1 = vec![Rational::from_integer(0.into()); arr.n];
    e1[0] = Rational::from_integer(1.into());
    if active.is_empty() || !exact_in_span(&grads, &e1) {
        return None;
    }
    Some(SingularHit {
        value: rational_to_f64(&x[0]),
        exact: Some(x[0].clone()),
        point: x.iter().map(rational_to_f64).collect(),
        exact_point: Some(x.to_vec()),
        active,
        source: source.to_string(),
    })
}

struct Lagrange<'a> {
    arr: &'a Arrangement,
    hess: Vec<Vec<Vec<CompiledPoly>>>,
}

impl<'a> Lagrange<'a> {
    fn new(arr: &'a Arrangement) -> Self {
        let hess = arr
            .primitives
            .iter()
            .map(|p| {
                p.f.gradient()
                    .iter()
                    .map(|g| g.gradient().iter().map(CompiledPoly::new).collect())
                    .collect()
            })
            .collect();
        Lagrange { arr, hess }
    }

    fn system(&self, set: &[usize], z: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let comp = self.arr.compiled();
        let n = self.arr.n;
        let (x, lam) = z.split_at(n);
        let k = set.len();
        let grads: Vec<Vec<f64>> = set.iter().map(|&j| comp.gradient(j, x)).collect();
        let mut g = Vec::with_capacity(k + n);
        let mut jac = Vec::with_capacity(k + n);
        for (i, &j) in set.iter().enumerate() {
            g.push(comp.f[j].eval(x));
            let mut row = grads[i].clone();
            row.extend(std::iter::repeat_n(0.0, k));
            jac.push(row);
        }
        for a in 0..n {
            let mut v = -f64::from(u8::from(a == 0));
            let mut row = vec![0.0; n + k];
            for (i, &j) in set.iter().enumerate() {
                v += lam[i] * grads[i][a];
                for (b, r) in row.iter_mut().take(n).enumerate() {
                    *r += lam[i] * self.hess[j][a][b].eval(x);
                }
                row[n + i] = grads[i][a];
            }
            g.push(v);
            jac.push(row);
        }
        (g, jac)
    }

    /// Gauss-Newton on `f_A(x) = 0`, `sum lambda_i grad f_i(x) = e1`.
    fn solve(&self, set: &[usize], x0: &[f64]) -> Option<Vec<f64>> {
        let comp = self.arr.compiled();
        let n = self.arr.n;
        let grads: Vec<Vec<f64>> = set.iter().map(|&j| comp.gradient(j, x0)).collect();
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let gt: Vec<Vec<f64>> = (0..n).map(|a| grads.iter().map(|g| g[a]).collect()).collect();
        let lam0 = min_norm_solve(&gt, &e1)?;
        let mut z: Vec<f64> = x0.iter().copied().chain(lam0).collect();
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let (mut g, mut jac) = self.system(set, &z);
        let mut r = norm(&g);
        for _ in 0..50 {
            if r < 1e-12 {
                break;
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = min_norm_solve(&jac, &rhs)?;
            let mut s = 1.0;
            loop {
                let zn: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                let (gn, jn) = self.system(set, &zn);
                let rn = norm(&gn);
                if rn < r {
                    z = zn;
                    g = gn;
                    jac = jn;
                    r = rn;
                    break;
                }
                s *= 0.5;
                if s < 1e-6 {
                    return (r < 1e-11).then(|| z[..n].to_vec());
                }
            }
        }
        (r < 1e-11).then(|| z[..n].to_vec())
    }
}

fn float_hit(arr: &Arrangement, x: &[f64], source: &str) -> Option<SingularHit> {
    let comp = arr.compiled();
    if !comp.is_closed(x, ACTIVATION_TOL) {
        return None;
    }
    let active = comp.active(x, ACTIVATION_TOL);
    if active.is_empty() {
        return None;
    }
    let grads: Vec<Vec<f64>> = active.iter().map(|&j| comp.gradient(j, x)).collect();
    let mut e1 = vec![0.0; x.len()];
    e1[0] = 1.0;
    if span_residual(&grads, &e1) >= SPAN_TOL {
        return None;
    }
    if let Some(q) = snap_exact(arr, x, &active) {
        if let Some(h) = exact_hit(arr, &q, source) {
            return Some(h);
        }
    }
    Some(SingularHit {
        value: x[0],
        exact: None,
        point: x.to_vec(),
        exact_point: None,
        active,
        source: source.to_string(),
    })
}

pub(crate) fn scan_with(lm: &LiftedManifold, ev: &Evidence) -> SingularScan {
    let arr = &lm.arrangement;
    let mut hits: Vec<SingularHit> = ev
        .candidates
        .iter()
        .filter_map(|c| exact_hit(arr, &c.point, &c.source))
        .collect();
    let mut starts: Vec<(Vec<usize>, Vec<f64>, &'static str)> = Vec::new();
    for b in &ev.boundary {
        starts.push((vec![b.primitive], b.point.clone(), "boundary critical point"));
    }
    for s in &ev.strata {
        starts.push((s.active.clone(), s.point.clone(), "intersection critical point"));
    }
    let lag = Lagrange::new(arr);
    let found: Vec<Option<SingularHit>> = starts
        .par_iter()
        .map(|(set, x0, src)| {
            if let Some(h) = float_hit(arr, x0, src) {
                return Some(h);
            }
            let x = lag.solve(set, x0)?;
            float_hit(arr, &x, src)
        })
        .collect();
    hits.extend(found.into_iter().flatten());
    let points_tested = ev.candidates.len() + starts.len();
    SingularScan {
        values: cluster(hits),
        points_tested,
    }
}

/// Sorts by value and merges neighbours closer than the value tolerance;
/// each cluster keeps an exact member when it has one.
fn cluster(mut hits: Vec<SingularHit>) -> Vec<SingularHit> {
    hits.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(b.exact.is_some().cmp(&a.exact.is_some()))
    });
    let mut out: Vec<Vec<SingularHit>> = Vec::new();
    for h in hits {
        match out.last_mut() {
            Some(c) if (h.value - c.last().unwrap().value).abs() <= super::VALUE_TOL => c.push(h),
            _ => out.push(vec![h]),
        }
    }
    out.into_iter()
        .map(|mut c| {
            if let Some(i) = c.iter().position(|h| h.exact.is_some()) {
                c.swap_remove(i)
            } else {
                let mid = c.len() / 2;
                c.swap_remove(mid)
            }
        })
        .collect()
}
