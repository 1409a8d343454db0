//! NCD candidates: a family of primitives `f_1..f_l` in `R^n`, the domain
//! `D = {all f_j > 0}`, and checks of the defining conditions.

mod compiled;
pub(crate) mod ncd;
pub(crate) mod sample;
pub(crate) mod strata;

use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use compiled::{Chord, Compiled};
pub use ncd::{certify_holes, check_ncd, NcdBudget};
pub use sample::{sample_boundary, sample_region, BoundarySample};
pub use strata::{locate_strata, solve_on, Stratum};

use crate::construct::{ExpectedProfile, ExpectedProfileJson, Variant};
use crate::error::{invalid, Error, Result};
use crate::geom::{Primitive, PrimitiveJson};
use crate::linalg::{exact_inverse, exact_rank, numerical_rank, row_rank_ratio};
use crate::poly::{rational_to_f64, rationals_from_json, rationals_to_json, Rational, RationalJson};

pub const ACTIVATION_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-8;
pub const SCHEMA_VERSION: u32 = 1;

/// Sampling box: `x1` in `[t_1 - pad, t_l + pad]`, every other coordinate in
/// `[-half_width, half_width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub pad: f64,
    pub half_width: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            pad: 5.0,
            half_width: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }
}

#[derive(Clone, Debug)]
pub struct Arrangement {
    pub n: usize,
    pub primitives: Vec<Primitive>,
    pub seed_point: Vec<Rational>,
    /// Which construction case produced this arrangement.
    pub provenance: String,
    pub t_values: Vec<Rational>,
    pub labels: Vec<u8>,
    pub variant: Option<Variant>,
    pub expected: Option<ExpectedProfile>,
    pub window_spec: WindowSpec,
    compiled: Arc<Compiled>,
}

impl PartialEq for Arrangement {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n
            && self.primitives == o.primitives
            && self.seed_point == o.seed_point
            && self.provenance == o.provenance
            && self.t_values == o.t_values
            && self.labels == o.labels
            && self.variant == o.variant
            && self.expected == o.expected
            && self.window_spec == o.window_spec
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Interior,
    /// All `f_j >= 0` and these are the indices with `f_j = 0`.
    Boundary(Vec<usize>),
    Exterior,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Point {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Point::Exact(v) => v.iter().map(rational_to_f64).collect(),
            Point::Float(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Point::Exact(v) => v.len(),
            Point::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Indices of constraints active at a point, under a stated tolerance
/// (zero for exact points).
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub point: Point,
    pub indices: Vec<usize>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub active: Vec<usize>,
    pub rank: usize,
    pub exact: bool,
    /// Smallest over largest singular value (float path only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Active constraints whose gradient vanishes at the point.
    pub zero_gradient: Vec<usize>,
    pub pass: bool,
}

impl Arrangement {
    /// Checked constructor: dimensions agree and the seed point is interior.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        primitives: Vec<Primitive>,
        seed_point: Vec<Rational>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let a = Self::new_unchecked(n, primitives, seed_point, provenance)?;
        if a.membership(&a.seed_point)? != Membership::Interior {
            return Err(invalid("seed point is not interior to D"));
        }
        Ok(a)
    }

    /// Only checks dimensions; `D` may be empty. Used for adversarial
    /// inputs such as two tangent discs.
    pub fn new_unchecked(
        n: usize,
        primitives: Vec<Primitive>,
        seed_point: Vec<Rational>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if primitives.is_empty() {
            return Err(invalid("an arrangement needs at least one primitive"));
        }
        for p in &primitives {
            if p.ambient_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.ambient_dim(),
                });
            }
        }
        if seed_point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: seed_point.len(),
            });
        }
        let compiled = Arc::new(Compiled::new(&primitives));
        Ok(Arrangement {
            n,
            primitives,
            seed_point,
            provenance: provenance.into(),
            t_values: Vec::new(),
            labels: Vec::new(),
            variant: None,
            expected: None,
            window_spec: WindowSpec::default(),
            compiled,
        })
    }

    pub fn with_data(mut self, t_values: Vec<Rational>, labels: Vec<u8>, variant: Option<Variant>) -> Self {
        self.t_values = t_values;
        self.labels = labels;
        self.variant = variant;
        self
    }

    pub fn with_expected(mut self, e: ExpectedProfile) -> Self {
        self.expected = Some(e);
        self
    }

    pub fn l(&self) -> usize {
        self.primitives.len()
    }

    pub fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    pub fn seed_f64(&self) -> Vec<f64> {
        self.seed_point.iter().map(rational_to_f64).collect()
    }

    /// The `x1` range spanned by the t-values, or by the primitive witnesses
    /// and the seed when no t-values are recorded.
    pub fn x1_range(&self) -> (f64, f64) {
        if let (Some(a), Some(b)) = (self.t_values.first(), self.t_values.last()) {
            return (rational_to_f64(a), rational_to_f64(b));
        }
        let xs = self
            .primitives
            .iter()
            .map(|p| rational_to_f64(&p.witness[0]))
            .chain(std::iter::once(rational_to_f64(&self.seed_point[0])));
        xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn window(&self) -> Window {
        let (a, b) = self.x1_range();
        let w = self.window_spec.half_width;
        let mut lo = vec![-w; self.n];
        let mut hi = vec![w; self.n];
        lo[0] = a - self.window_spec.pad;
        hi[0] = b + self.window_spec.pad;
        Window { lo, hi }
    }

    pub fn membership(&self, x: &[Rational]) -> Result<Membership> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut active = Vec::new();
        for (j, p) in self.primitives.iter().enumerate() {
            let v = p.f.eval(x)?;
            if v.is_negative() {
                return Ok(Membership::Exterior);
            }
            if v.is_zero() {
                active.push(j);
            }
        }
        Ok(if active.is_empty() {
            Membership::Interior
        } else {
            Membership::Boundary(active)
        })
    }

    /// Float membership with activation tolerance [`ACTIVATION_TOL`].
    pub fn membership_f64(&self, x: &[f64]) -> Result<Membership> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut active = Vec::new();
        for (j, f) in self.compiled.f.iter().enumerate() {
            let v = f.eval(x);
            if v < -ACTIVATION_TOL {
                return Ok(Membership::Exterior);
            }
            if v <= ACTIVATION_TOL {
                active.push(j);
            }
        }
        Ok(if active.is_empty() {
            Membership::Interior
        } else {
            Membership::Boundary(active)
        })
    }

    pub fn active_set(&self, point: &Point) -> Result<ActiveSet> {
        let (indices, tolerance) = match point {
            Point::Exact(x) => (
                match self.membership(x)? {
                    Membership::Boundary(v) => v,
                    _ => {
                        let mut v = Vec::new();
                        for (j, p) in self.primitives.iter().enumerate() {
                            if p.f.eval(x)?.is_zero() {
                                v.push(j);
                            }
                        }
                        v
                    }
                },
                0.0,
            ),
            Point::Float(x) => {
                if x.len() != self.n {
                    return Err(Error::DimensionMismatch {
                        expected: self.n,
                        got: x.len(),
                    });
                }
                (self.compiled.active(x, ACTIVATION_TOL), ACTIVATION_TOL)
            }
        };
        Ok(ActiveSet {
            point: point.clone(),
            indices,
            tolerance,
        })
    }

    /// Rank of the gradients of the active constraints at `p`. Exact over Q
    /// for rational points, otherwise smallest/largest singular value ratio
    /// against [`RANK_TOL`].
    pub fn check_transversality_at(&self, p: &Point, active: &[usize]) -> Result<RankReport> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let mut zero_gradient = Vec::new();
        let report = match p {
            Point::Exact(x) => {
                let mut rows = Vec::with_capacity(active.len());
                for &j in active {
                    let g = self.primitives[j]
                        .f
                        .gradient()
                        .iter()
                        .map(|d| d.eval(x))
                        .collect::<Result<Vec<_>>>()?;
                    if g.iter().all(Zero::is_zero) {
                        zero_gradient.push(j);
                    }
                    rows.push(g);
                }
                let rank = exact_rank(&rows);
                RankReport {
                    active: active.to_vec(),
                    rank,
                    exact: true,
                    ratio: None,
                    pass: rank == active.len() && zero_gradient.is_empty(),
                    zero_gradient,
                }
            }
            Point::Float(x) => {
                let rows: Vec<Vec<f64>> = active.iter().map(|&j| self.compiled.gradient(j, x)).collect();
                for (&j, g) in active.iter().zip(&rows) {
                    if g.iter().all(|v| v.abs() < 1e-14) {
                        zero_gradient.push(j);
                    }
                }
                let rank = numerical_rank(&rows, RANK_TOL);
                let ratio = if rows.is_empty() { 1.0 } else { row_rank_ratio(&rows) };
                RankReport {
                    active: active.to_vec(),
                    rank,
                    exact: false,
                    ratio: Some(ratio),
                    pass: rank == active.len() && ratio > RANK_TOL && zero_gradient.is_empty(),
                    zero_gradient,
                }
            }
        };
        Ok(report)
    }

    /// The image arrangement under `T(x) = A x + b`: every `f_j` becomes
    /// `f_j o T^-1`, and seed and witnesses are mapped by `T`. Primitive
    /// metadata keeps describing the preimage.
    pub fn transformed(&self, a: &[Vec<Rational>], b: &[Rational]) -> Result<Arrangement> {
        if a.len() != self.n || b.len() != self.n || a.iter().any(|r| r.len() != self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.len(),
            });
        }
        let inv = exact_inverse(a).ok_or(Error::SingularTransform)?;
        // T^-1(y) = inv y - inv b
        let shift: Vec<Rational> = inv
            .iter()
            .map(|row| -row.iter().zip(b).map(|(p, q)| p * q).sum::<Rational>())
            .collect();
        let apply = |x: &[Rational]| -> Vec<Rational> {
            a.iter()
                .zip(b)
                .map(|(row, bi)| row.iter().zip(x).map(|(p, q)| p * q).sum::<Rational>() + bi)
                .collect()
        };
        let mut prims = Vec::with_capacity(self.l());
        for p in &self.primitives {
            let mut q = p.clone();
            q.f = p.f.affine_subst(&inv, &shift)?;
            for c in &mut q.component.conditions {
                c.poly = c.poly.affine_subst(&inv, &shift)?;
            }
            q.witness = apply(&p.witness);
            prims.push(q);
        }
        let mut out = Arrangement::new_unchecked(self.n, prims, apply(&self.seed_point), self.provenance.clone())?;
        out.window_spec = self.window_spec;
        Ok(out)
    }

    pub fn to_json(&self) -> ArrangementJson {
        ArrangementJson {
            version: SCHEMA_VERSION,
            n: self.n,
            t_values: rationals_to_json(&self.t_values),
            labels: self.labels.clone(),
            variant: self.variant,
            primitives: self.primitives.iter().map(PrimitiveJson::from).collect(),
            seed_point: rationals_to_json(&self.seed_point),
            provenance: self.provenance.clone(),
            window: self.window_spec,
            expected: self.expected.as_ref().map(ExpectedProfileJson::from),
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("arrangement serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let j: ArrangementJson = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("line {} column {}: {e}", e.line(), e.column())))?;
        j.to_arrangement()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementJson {
    pub version: u32,
    pub n: usize,
    pub t_values: Vec<RationalJson>,
    pub labels: Vec<u8>,
    pub variant: Option<Variant>,
    pub primitives: Vec<PrimitiveJson>,
    pub seed_point: Vec<RationalJson>,
    pub provenance: String,
    pub window: WindowSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedProfileJson>,
}

impl ArrangementJson {
    pub fn to_arrangement(&self) -> Result<Arrangement> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported arrangement version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        let prims = self
            .primitives
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.to_primitive()
                    .map_err(|e| Error::Schema(format!("primitives[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Schema(format!("label {l} is not 0 or 1")));
        }
        let t = rationals_from_json(&self.t_values)?;
        let mut a = Arrangement::new_unchecked(
            self.n,
            prims,
            rationals_from_json(&self.seed_point)?,
            self.provenance.clone(),
        )
        .map_err(|e| Error::Schema(e.to_string()))?
        .with_data(t, self.labels.clone(), self.variant);
        a.window_spec = self.window;
        if let Some(e) = &self.expected {
            a.expected = Some(e.to_profile()?);
        }
        Ok(a)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geom::{ellipsoid, half_plane, Orientation, Side};
    use crate::poly::{int, rat};

    pub(crate) fn unit_square() -> Arrangement {
        let q = |a: i64, b: i64| [int(a), int(b)];
        let prims = vec![
            half_plane(q(0, 0), q(0, 1), Side::Plus).unwrap(),
            half_plane(q(0, 0), q(1, 0), Side::Plus).unwrap(),
            half_plane(q(1, 0), q(1, 1), Side::Minus).unwrap(),
            half_plane(q(0, 1), q(1, 1), Side::Minus).unwrap(),
        ];
        Arrangement::new(2, prims, vec![rat(1, 2), rat(1, 2)], "test").unwrap()
    }

    #[test]
    fn membership_examples() {
        let a = unit_square();
        assert_eq!(a.membership(&[rat(1, 2), rat(1, 2)]).unwrap(), Membership::Interior);
        assert_eq!(
            a.membership(&[int(0), int(0)]).unwrap(),
            Membership::Boundary(vec![0, 1])
        );
        assert_eq!(a.membership(&[int(2), int(0)]).unwrap(), Membership::Exterior);
        assert_eq!(
            a.membership_f64(&[1.0, 0.5 + 1e-12]).unwrap(),
            Membership::Boundary(vec![2])
        );
        assert!(a.membership(&[int(0)]).is_err());
    }

    #[test]
    fn transversality_examples() {
        let a = unit_square();
        let r = a
            .check_transversality_at(&Point::Exact(vec![int(0), int(0)]), &[0, 1])
            .unwrap();
        assert!(r.pass && r.exact && r.rank == 2);

        let disc = |c: i64| ellipsoid(vec![int(c), int(0)], vec![int(1), int(1)], Orientation::Body).unwrap();
        let t = Arrangement::new_unchecked(2, vec![disc(0), disc(2)], vec![int(1), int(0)], "tangent").unwrap();
        let p = Point::Exact(vec![int(1), int(0)]);
        let act = t.active_set(&p).unwrap();
        assert_eq!(act.indices, vec![0, 1]);
        let r = t.check_transversality_at(&p, &act.indices).unwrap();
        assert!(!r.pass);
        assert_eq!(r.rank, 1);
        let rf = t
            .check_transversality_at(&Point::Float(vec![1.0, 0.0]), &[0, 1])
            .unwrap();
        assert!(!rf.pass);
    }

    #[test]
    fn json_roundtrip_is_byte_identical() {
        let a = unit_square().with_data(vec![int(0), int(1)], vec![0], Some(Variant::Mt2));
        let s = a.to_json_string();
        let b = Arrangement::from_json_str(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_json_string(), s);
        let broken = s.replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(Arrangement::from_json_str(&broken), Err(Error::Schema(_))));
    }

    #[test]
    fn transform_preserves_membership() {
        let a = unit_square();
        let m = vec![vec![int(2), int(1)], vec![int(0), int(1)]];
        let b = vec![int(3), rat(-1, 2)];
        let ta = a.transformed(&m, &b).unwrap();
        for x in [
            [rat(1, 2), rat(1, 2)],
            [int(0), int(0)],
            [int(2), int(0)],
            [int(1), rat(1, 3)],
        ] {
            let y: Vec<Rational> = m
                .iter()
                .zip(&b)
                .map(|(r, bi)| &r[0] * &x[0] + &r[1] * &x[1] + bi)
                .collect();
            assert_eq!(a.membership(&x).unwrap(), ta.membership(&y).unwrap());
        }
        assert!(a
            .transformed(&[vec![int(1), int(1)], vec![int(1), int(1)]], &b)
            .is_err());
    }
}
