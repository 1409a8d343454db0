use crate::geom::{Primitive, Sign};
use crate::poly::CompiledPoly;

/// Float evaluation form of an arrangement: constraints, their gradients and
/// the component descriptors.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub n: usize,
    pub f: Vec<CompiledPoly>,
    pub grad: Vec<Vec<CompiledPoly>>,
    pub desc: Vec<Vec<(CompiledPoly, Sign)>>,
}

/// The open interval `(lo, hi)` of line parameters around 0 that stays in
/// `D` and the window, with the constraint that ends it on each side
/// (`None` when the window ends it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chord {
    pub lo: f64,
    pub hi: f64,
    pub lo_by: Option<usize>,
    pub hi_by: Option<usize>,
}

/// Roots of `a s^2 + b s + c`, unordered, finite only.
pub(crate) fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

impl Compiled {
    pub fn new(prims: &[Primitive]) -> Self {
        let n = prims.first().map_or(0, Primitive::ambient_dim);
        Compiled {
            n,
            f: prims.iter().map(|p| CompiledPoly::new(&p.f)).collect(),
            grad: prims
                .iter()
                .map(|p| p.f.gradient().iter().map(CompiledPoly::new).collect())
                .collect(),
            desc: prims
                .iter()
                .map(|p| {
                    p.component
                        .conditions
                        .iter()
                        .map(|c| (CompiledPoly::new(&c.poly), c.sign))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn l(&self) -> usize {
        self.f.len()
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.f.iter().map(|f| f.eval(x)).collect()
    }

    pub fn min_value(&self, x: &[f64]) -> f64 {
        self.f.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min)
    }

    /// All `f_j > 0`.
    pub fn is_open(&self, x: &[f64]) -> bool {
        self.f.iter().all(|f| f.eval(x) > 0.0)
    }

    /// All `f_j >= -tol`.
    pub fn is_closed(&self, x: &[f64], tol: f64) -> bool {
        self.f.iter().all(|f| f.eval(x) >= -tol)
    }

    /// All `f_k >= -tol` for `k` outside `skip`.
    pub fn is_closed_except(&self, x: &[f64], tol: f64, skip: &[usize]) -> bool {
        self.f
            .iter()
            .enumerate()
            .all(|(k, f)| skip.contains(&k) || f.eval(x) >= -tol)
    }

    pub fn active(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (0..self.l()).filter(|&j| self.f[j].eval(x).abs() <= tol).collect()
    }

    pub fn gradient(&self, j: usize, x: &[f64]) -> Vec<f64> {
        self.grad[j].iter().map(|g| g.eval(x)).collect()
    }

    /// Whether `x` satisfies the component descriptor of `S_j`.
    pub fn on_component(&self, j: usize, x: &[f64]) -> bool {
        self.desc[j].iter().all(|(p, s)| {
            let v = p.eval(x);
            match s {
                Sign::Positive => v > 0.0,
                Sign::Negative => v < 0.0,
            }
        })
    }

    /// Coefficients `(a, b, c)` of `s -> f_j(x + s d)`, exact up to rounding
    /// since every constraint has degree at most 2.
    pub fn line_quadratic(&self, j: usize, x: &[f64], d: &[f64], buf: &mut Vec<f64>) -> (f64, f64, f64) {
        let f = &self.f[j];
        let c = f.eval(x);
        buf.clear();
        buf.extend(x.iter().zip(d).map(|(a, b)| a + b));
        let p = f.eval(buf);
        buf.clear();
        buf.extend(x.iter().zip(d).map(|(a, b)| a - b));
        let m = f.eval(buf);
        let a = 0.5 * (p + m) - c;
        let b = 0.5 * (p - m);
        (a, b, c)
    }

    /// The chord through an interior point `x` along `d`, clipped to the box
    /// `[lo, hi]`.
    pub fn chord(&self, x: &[f64], d: &[f64], lo: &[f64], hi: &[f64]) -> Chord {
        let mut ch = Chord {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_by: None,
            hi_by: None,
        };
        for k in 0..x.len() {
            if d[k] > 0.0 {
                ch.hi = ch.hi.min((hi[k] - x[k]) / d[k]);
                ch.lo = ch.lo.max((lo[k] - x[k]) / d[k]);
            } else if d[k] < 0.0 {
                ch.hi = ch.hi.min((lo[k] - x[k]) / d[k]);
                ch.lo = ch.lo.max((hi[k] - x[k]) / d[k]);
            }
        }
        let mut buf = Vec::with_capacity(x.len());
        for j in 0..self.l() {
            let (a, b, c) = self.line_quadratic(j, x, d, &mut buf);
            for r in quadratic_roots(a, b, c) {
                if r > 0.0 && r < ch.hi {
                    ch.hi = r;
                    ch.hi_by = Some(j);
                } else if r < 0.0 && r > ch.lo {
                    ch.lo = r;
                    ch.lo_by = Some(j);
                }
            }
        }
        ch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_stable() {
        let mut r = quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert_eq!(quadratic_roots(0.0, 2.0, -1.0), vec![0.5]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
        let r = quadratic_roots(1e-20, 1.0, -1.0);
        assert!(r.iter().any(|v| (v - 1.0).abs() < 1e-12));
    }
}
