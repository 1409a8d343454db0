//! The manifold `M = {(x, y) : f_j(x) = |y_j|^2 for all j}` over an NCD and
//! its projections `f_D(x, y) = x`, `f(x, y) = x1`.
//!
//! Variables are ordered `x1..xn` followed by the `y` blocks in primitive
//! order; in polynomial text the block coordinates continue the `x`
//! numbering (`x_{n+1}, ...`).

use std::ops::Range;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::sample::{rng, sub_seed};
use crate::arrangement::{sample_region, Arrangement, ArrangementJson, Membership, Point};
use crate::error::{invalid, Error, Result};
use crate::linalg::exact_rank;
use crate::poly::{int, CompiledPoly, Polynomial, PolynomialJson, Rational};

pub const MANIFOLD_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct LiftedManifold {
    pub arrangement: Arrangement,
    pub m: usize,
    pub block_sizes: Vec<usize>,
    /// `F_j = f_j(x) - |y_j|^2` in `n + sum d_j` variables.
    pub equations: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
}

impl PartialEq for LiftedManifold {
    fn eq(&self, other: &Self) -> bool {
        self.arrangement == other.arrangement && self.m == other.m && self.equations == other.equations
    }
}

/// Smallest admissible `m`: every block gets at least two coordinates.
pub fn min_m(arr: &Arrangement) -> usize {
    arr.n + arr.l()
}

/// Near-equal split of `total` into `parts`, larger blocks first.
pub fn block_sizes(total: usize, parts: usize) -> Vec<usize> {
    let (q, r) = (total / parts, total % parts);
    (0..parts).map(|j| q + usize::from(j < r)).collect()
}

pub fn lift(arr: &Arrangement, m: usize) -> Result<LiftedManifold> {
    let (n, l) = (arr.n, arr.l());
    if m < min_m(arr) {
        return Err(invalid(format!(
            "m = {m} is too small: need m >= n + l = {}",
            min_m(arr)
        )));
    }
    let sizes = block_sizes(m - n + l, l);
    let dim = n + sizes.iter().sum::<usize>();
    let mapping: Vec<usize> = (0..n).collect();
    let mut equations = Vec::with_capacity(l);
    let mut offset = n;
    for (p, &d) in arr.primitives.iter().zip(&sizes) {
        let mut f = p.f.embed(dim, &mapping)?;
        for k in offset..offset + d {
            let y = Polynomial::var(dim, k);
            f = f - &y * &y;
        }
        equations.push(f);
        offset += d;
    }
    let compiled = equations.iter().map(CompiledPoly::new).collect();
    Ok(LiftedManifold {
        arrangement: arr.clone(),
        m,
        block_sizes: sizes,
        equations,
        compiled,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberFactor {
    /// `d_j - 1`.
    pub sphere_dim: usize,
    pub squared_radius: f64,
    pub exact: Option<Rational>,
}

impl FiberFactor {
    pub fn is_degenerate(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.squared_radius <= 0.0,
        }
    }
}

/// Preimage of a base point under `f_D`: a product of spheres, one factor
/// per block, or empty over the exterior.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub factors: Vec<FiberFactor>,
}

impl Fiber {
    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| !f.is_degenerate())
            .map(|f| f.sphere_dim)
            .sum()
    }
}

impl LiftedManifold {
    pub fn n(&self) -> usize {
        self.arrangement.n
    }

    pub fn l(&self) -> usize {
        self.equations.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n() + self.block_sizes.iter().sum::<usize>()
    }

    pub fn block(&self, j: usize) -> Range<usize> {
        let start = self.n() + self.block_sizes[..j].iter().sum::<usize>();
        start..start + self.block_sizes[j]
    }

    pub fn variable_names(&self) -> Vec<String> {
        let mut v: Vec<String> = (1..=self.n()).map(|k| format!("x{k}")).collect();
        for (j, &d) in self.block_sizes.iter().enumerate() {
            v.extend((1..=d).map(|k| format!("y{}_{k}", j + 1)));
        }
        v
    }

    pub fn fiber_at(&self, p: &Point) -> Result<Fiber> {
        let sizes = self.block_sizes.iter().map(|d| d - 1);
        let factors = match p {
            Point::Exact(x) => {
                if self.arrangement.membership(x)? == Membership::Exterior {
                    return Ok(Fiber { factors: Vec::new() });
                }
                self.arrangement
                    .primitives
                    .iter()
                    .zip(sizes)
                    .map(|(prim, sphere_dim)| {
                        let r = prim.f.eval(x)?;
                        Ok(FiberFactor {
                            sphere_dim,
                            squared_radius: crate::poly::rational_to_f64(&r),
                            exact: Some(r),
                        })
                    })
                    .collect::<Result<_>>()?
            }
            Point::Float(x) => {
                if self.arrangement.membership_f64(x)? == Membership::Exterior {
                    return Ok(Fiber { factors: Vec::new() });
                }
                let vals = self.arrangement.compiled().values(x);
                vals.into_iter()
                    .zip(sizes)
                    .map(|(v, sphere_dim)| FiberFactor {
                        sphere_dim,
                        squared_radius: v.max(0.0),
                        exact: None,
                    })
                    .collect()
            }
        };
        Ok(Fiber { factors })
    }

    /// Points of `M` over the given base points of `D-bar`, with each `y_j`
    /// uniform on its sphere. Blocks with `f_j(x) <= 1e-12` get `y_j = 0`.
    pub fn lift_points(&self, bases: &[Vec<f64>], seed: u64) -> Vec<Vec<f64>> {
        let comp = self.arrangement.compiled();
        bases
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut r = rng(sub_seed(seed, i as u64));
                let mut q = x.clone();
                for (j, &d) in self.block_sizes.iter().enumerate() {
                    let v = comp.f[j].eval(x);
                    let mut g: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
                    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let radius = if v > 1e-12 { v.sqrt() } else { 0.0 };
                    if norm == 0.0 {
                        g = vec![0.0; d];
                        g[0] = 1.0;
                    } else {
                        g.iter_mut().for_each(|a| *a /= norm);
                    }
                    q.extend(g.into_iter().map(|a| a * radius));
                }
                q
            })
            .collect()
    }

    /// `count` manifold points over seeded interior samples of `D`.
    pub fn sample_manifold(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let bases = sample_region(&self.arrangement, count, sub_seed(seed, 0))?;
        Ok(self.lift_points(&bases, sub_seed(seed, 1)))
    }

    /// `(f_D(q), f(q))`.
    pub fn project(&self, q: &[f64]) -> (Vec<f64>, f64) {
        (q[..self.n()].to_vec(), q[0])
    }

    pub fn residuals(&self, q: &[f64]) -> Vec<f64> {
        self.compiled.iter().map(|c| c.eval(q)).collect()
    }

    /// Float Jacobian of `(F_1..F_l)`, assembled from the base gradients
    /// and the `-2 y_j` block entries.
    pub fn jacobian(&self, q: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n();
        let comp = self.arrangement.compiled();
        (0..self.l())
            .map(|j| {
                let mut row = vec![0.0; self.ambient_dim()];
                row[..n].copy_from_slice(&comp.gradient(j, &q[..n]));
                for k in self.block(j) {
                    row[k] = -2.0 * q[k];
                }
                row
            })
            .collect()
    }

    pub fn jacobian_exact(&self, q: &[Rational]) -> Result<Vec<Vec<Rational>>> {
        if q.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: q.len(),
            });
        }
        self.equations
            .iter()
            .map(|f| f.gradient().iter().map(|g| g.eval(q)).collect())
            .collect()
    }

    /// Rational stand-in for the fibre over an exact base point: `y_j` is
    /// a multiple of the first block axis, nonzero iff `f_j(x) > 0`. Row `j`
    /// of the Jacobian only sees `y_j` through its own block, so the rank is
    /// the same at every point of the true fibre.
    pub fn rank_representative(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        let mut q = x.to_vec();
        for (p, &d) in self.arrangement.primitives.iter().zip(&self.block_sizes) {
            let v = p.f.eval(x)?;
            if v.is_negative() {
                return Err(invalid("base point lies outside D-bar"));
            }
            q.push(if v.is_zero() { int(0) } else { int(1) });
            q.extend((1..d).map(|_| int(0)));
        }
        Ok(q)
    }

    /// Exact Jacobian rank over an exact base point of `D-bar`.
    pub fn exact_rank_over(&self, x: &[Rational]) -> Result<usize> {
        let q = self.rank_representative(x)?;
        Ok(exact_rank(&self.jacobian_exact(&q)?))
    }

    pub fn to_json(&self) -> ManifoldJson {
        ManifoldJson {
            version: MANIFOLD_SCHEMA_VERSION,
            m: self.m,
            n: self.n(),
            ambient_dim: self.ambient_dim(),
            block_sizes: self.block_sizes.clone(),
            variables: self.variable_names(),
            equations: self.equations.iter().map(PolynomialJson::from).collect(),
            arrangement: self.arrangement.to_json(),
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("manifold serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let j: ManifoldJson = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("line {} column {}: {e}", e.line(), e.column())))?;
        j.to_manifold()
    }

    /// Newline-separated equation text, one `F_j` per line.
    pub fn equations_text(&self) -> String {
        self.equations.iter().map(|f| format!("{f}\n")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldJson {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub ambient_dim: usize,
    pub block_sizes: Vec<usize>,
    pub variables: Vec<String>,
    pub equations: Vec<PolynomialJson>,
    pub arrangement: ArrangementJson,
}

impl ManifoldJson {
    /// Re-lifts the embedded arrangement and checks every recorded field
    /// against the result.
    pub fn to_manifold(&self) -> Result<LiftedManifold> {
        if self.version != MANIFOLD_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported manifold version {}", self.version)));
        }
        let arr = self.arrangement.to_arrangement()?;
        let lm = lift(&arr, self.m)?;
        if lm.block_sizes != self.block_sizes || lm.ambient_dim() != self.ambient_dim || lm.n() != self.n {
            return Err(Error::Schema(
                "block structure does not match m and the arrangement".into(),
            ));
        }
        let eqs = self
            .equations
            .iter()
            .map(PolynomialJson::to_polynomial)
            .collect::<Result<Vec<_>>>()?;
        if eqs != lm.equations {
            return Err(Error::Schema("equations do not match the lifted arrangement".into()));
        }
        Ok(lm)
    }
}

/// Reads either a manifold file or a bare arrangement file (lifted at the
/// minimal `m`).
pub fn load_manifold_or_arrangement(text: &str) -> Result<LiftedManifold> {
    let v: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Schema(format!("line {} column {}: {e}", e.line(), e.column())))?;
    if v.get("equations").is_some() {
        LiftedManifold::from_json_str(text)
    } else {
        let arr = Arrangement::from_json_str(text)?;
        lift(&arr, min_m(&arr))
    }
}
