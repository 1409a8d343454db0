//! Boundary primitives: half-planes, hyperbola regions, ellipsoid bodies and
//! holes, and their cylinders in higher-dimensional space.
//!
//! Every primitive carries a defining polynomial `f` with the inside-positive
//! convention: `{f > 0}` is the open region the primitive contributes to the
//! domain, and `{f >= 0}` its closure. The selected boundary piece `S` is the
//! part of `{f = 0}` satisfying the component descriptor.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::{
    int, rationals_from_json, rationals_to_json, CompiledPoly, Polynomial, PolynomialJson, Rational, RationalJson,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    HalfPlane,
    HyperbolaRegion,
    EllipsoidBody,
    EllipsoidHole,
}

impl PrimitiveKind {
    pub fn tag(self) -> &'static str {
        match self {
            PrimitiveKind::HalfPlane => "half_plane",
            PrimitiveKind::HyperbolaRegion => "hyperbola_region",
            PrimitiveKind::EllipsoidBody => "ellipsoid_body",
            PrimitiveKind::EllipsoidHole => "ellipsoid_hole",
        }
    }
}

/// Which closed side of a line a half-plane keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `x2 >= a1 x1 + a2`, or `x1 >= a` for a vertical line.
    Plus,
    Minus,
}

/// The two hyperbola families `(x1 - a)(x2 - b) = c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolaVariant {
    /// `c > 0`; branches in the (+,+) and (-,-) quadrants around `(a, b)`.
    LeftOf,
    /// `c < 0`; branches in the (-,+) and (+,-) quadrants around `(a, b)`.
    RightOf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Body,
    Hole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignCondition {
    pub poly: Polynomial,
    pub sign: Sign,
}

/// Conjunction of strict sign conditions selecting one connected component
/// of a zero set. Empty means the whole zero set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentDescriptor {
    pub conditions: Vec<SignCondition>,
}

impl ComponentDescriptor {
    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn contains(&self, x: &[Rational]) -> Result<bool> {
        for c in &self.conditions {
            let v = c.poly.eval(x)?;
            let ok = match c.sign {
                Sign::Positive => v.is_positive(),
                Sign::Negative => v.is_negative(),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains_f64(&self, x: &[f64]) -> bool {
        self.conditions.iter().all(|c| {
            let v = CompiledPoly::new(&c.poly).eval(x);
            match c.sign {
                Sign::Positive => v > 0.0,
                Sign::Negative => v < 0.0,
            }
        })
    }

    fn embed(&self, n: usize, mapping: &[usize]) -> Result<Self> {
        Ok(ComponentDescriptor {
            conditions: self
                .conditions
                .iter()
                .map(|c| {
                    Ok(SignCondition {
                        poly: c.poly.embed(n, mapping)?,
                        sign: c.sign,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}

/// Exact defining data in the primitive's local coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Metadata {
    Line {
        p1: [Rational; 2],
        p2: [Rational; 2],
        side: Side,
    },
    Hyperbola {
        variant: HyperbolaVariant,
        a: Rational,
        b: Rational,
        c: Rational,
        branch_plus: ComponentDescriptor,
        branch_minus: ComponentDescriptor,
    },
    Ellipsoid {
        centers: Vec<Rational>,
        squared_semi_axes: Vec<Rational>,
        orientation: Orientation,
    },
}

impl Metadata {
    pub fn local_dim(&self) -> usize {
        match self {
            Metadata::Line { .. } | Metadata::Hyperbola { .. } => 2,
            Metadata::Ellipsoid { centers, .. } => centers.len(),
        }
    }

    /// Re-expands the defining polynomial in local coordinates.
    pub fn expand(&self) -> Polynomial {
        match self {
            Metadata::Line { p1, p2, side } => line_form(p1, p2, *side),
            Metadata::Hyperbola { variant, a, b, c, .. } => hyperbola_form(*variant, a, b, c),
            Metadata::Ellipsoid {
                centers,
                squared_semi_axes,
                orientation,
            } => ellipsoid_form(centers, squared_semi_axes, *orientation),
        }
    }
}

/// One boundary piece of a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    /// Local coordinate `i` of the metadata lives on ambient axis `axes[i]`.
    pub axes: Vec<usize>,
    pub f: Polynomial,
    pub component: ComponentDescriptor,
    pub metadata: Metadata,
    /// A point with `f > 0`, exact.
    pub witness: Vec<Rational>,
}

impl Primitive {
    pub fn ambient_dim(&self) -> usize {
        self.f.num_vars()
    }

    pub fn is_cylinder(&self) -> bool {
        self.axes.len() < self.ambient_dim()
    }

    /// `half_plane`, or `cylinder_of(half_plane)` for cylinders.
    pub fn kind_tag(&self) -> String {
        if self.is_cylinder() {
            format!("cylinder_of({})", self.kind.tag())
        } else {
            self.kind.tag().to_string()
        }
    }

    /// Metadata re-expanded and placed on `axes`; equals `f` for every
    /// primitive built by this module.
    pub fn reexpand(&self) -> Result<Polynomial> {
        self.metadata.expand().embed(self.ambient_dim(), &self.axes)
    }
}

fn line_form(p1: &[Rational; 2], p2: &[Rational; 2], side: Side) -> Polynomial {
    let plus = if p1[0] == p2[0] {
        // x1 - a
        Polynomial::linear(&[int(1), int(0)], -p1[0].clone())
    } else {
        let slope = (&p2[1] - &p1[1]) / (&p2[0] - &p1[0]);
        let icept = &p1[1] - &slope * &p1[0];
        Polynomial::linear(&[-slope, int(1)], -icept)
    };
    match side {
        Side::Plus => plus,
        Side::Minus => -plus,
    }
}

fn hyperbola_form(variant: HyperbolaVariant, a: &Rational, b: &Rational, c: &Rational) -> Polynomial {
    let u = Polynomial::linear(&[int(1), int(0)], -a.clone());
    let v = Polynomial::linear(&[int(0), int(1)], -b.clone());
    let uv = &u * &v;
    let cst = Polynomial::constant(2, c.clone());
    match variant {
        HyperbolaVariant::LeftOf => &cst - &uv,
        HyperbolaVariant::RightOf => &uv - &cst,
    }
}

fn ellipsoid_form(centers: &[Rational], r: &[Rational], orientation: Orientation) -> Polynomial {
    let k = centers.len();
    let mut sum = Polynomial::zero(k);
    for (j, (a, rj)) in centers.iter().zip(r).enumerate() {
        let d = &Polynomial::var(k, j) - &Polynomial::constant(k, a.clone());
        sum = &sum + &(&d * &d).scale(&(Rational::one() / rj));
    }
    let one = Polynomial::constant(k, Rational::one());
    match orientation {
        Orientation::Body => &one - &sum,
        Orientation::Hole => &sum - &one,
    }
}

/// Closed half-plane bounded by the line through `p1` and `p2`.
pub fn half_plane(p1: [Rational; 2], p2: [Rational; 2], side: Side) -> Result<Primitive> {
    if p1 == p2 {
        return Err(invalid("half_plane needs two distinct points"));
    }
    let f = line_form(&p1, &p2, side);
    let grad: Vec<Rational> = f.gradient().iter().map(|g| g.constant_term()).collect();
    let two = int(2);
    let witness = vec![(&p1[0] + &p2[0]) / &two + &grad[0], (&p1[1] + &p2[1]) / &two + &grad[1]];
    Ok(Primitive {
        kind: PrimitiveKind::HalfPlane,
        axes: vec![0, 1],
        f,
        component: ComponentDescriptor::default(),
        metadata: Metadata::Line { p1, p2, side },
        witness,
    })
}

/// The closed region between the two branches of `(x1 - a)(x2 - b) = c`.
/// The selected boundary piece is the `x2 > b` branch.
pub fn hyperbola_region(variant: HyperbolaVariant, a: Rational, b: Rational, c: Rational) -> Result<Primitive> {
    match variant {
        HyperbolaVariant::LeftOf if !c.is_positive() => {
            return Err(invalid(format!("hyperbola (-inf,a] variant needs c > 0, got {c}")))
        }
        HyperbolaVariant::RightOf if !c.is_negative() => {
            return Err(invalid(format!("hyperbola [a,inf) variant needs c < 0, got {c}")))
        }
        _ => {}
    }
    let u = Polynomial::linear(&[int(1), int(0)], -a.clone());
    let v = Polynomial::linear(&[int(0), int(1)], -b.clone());
    let cond = |p: &Polynomial, sign| SignCondition { poly: p.clone(), sign };
    let (branch_plus, branch_minus) = match variant {
        HyperbolaVariant::LeftOf => (
            vec![cond(&u, Sign::Positive), cond(&v, Sign::Positive)],
            vec![cond(&u, Sign::Negative), cond(&v, Sign::Negative)],
        ),
        HyperbolaVariant::RightOf => (
            vec![cond(&u, Sign::Negative), cond(&v, Sign::Positive)],
            vec![cond(&u, Sign::Positive), cond(&v, Sign::Negative)],
        ),
    };
    let branch_plus = ComponentDescriptor {
        conditions: branch_plus,
    };
    let branch_minus = ComponentDescriptor {
        conditions: branch_minus,
    };
    Ok(Primitive {
        kind: PrimitiveKind::HyperbolaRegion,
        axes: vec![0, 1],
        f: hyperbola_form(variant, &a, &b, &c),
        component: branch_plus.clone(),
        witness: vec![a.clone(), b.clone()],
        metadata: Metadata::Hyperbola {
            variant,
            a,
            b,
            c,
            branch_plus,
            branch_minus,
        },
    })
}

/// Ellipsoid `sum (x_j - a_j)^2 / r_j <= 1` as a body (inside-positive) or as
/// a removed hole (outside-positive).
pub fn ellipsoid(
    centers: Vec<Rational>,
    squared_semi_axes: Vec<Rational>,
    orientation: Orientation,
) -> Result<Primitive> {
    if centers.is_empty() || centers.len() != squared_semi_axes.len() {
        return Err(invalid(format!(
            "ellipsoid needs matching non-empty centre ({}) and axis ({}) lists",
            centers.len(),
            squared_semi_axes.len()
        )));
    }
    if let Some(r) = squared_semi_axes.iter().find(|r| !r.is_positive()) {
        return Err(invalid(format!("squared semi-axis must be positive, got {r}")));
    }
    let k = centers.len();
    let f = ellipsoid_form(&centers, &squared_semi_axes, orientation);
    let mut witness = centers.clone();
    let kind = match orientation {
        Orientation::Body => PrimitiveKind::EllipsoidBody,
        Orientation::Hole => {
            // (r + 1)^2 / r > 1 for r > 0
            witness[0] += &squared_semi_axes[0] + Rational::one();
            PrimitiveKind::EllipsoidHole
        }
    };
    Ok(Primitive {
        kind,
        axes: (0..k).collect(),
        f,
        component: ComponentDescriptor::default(),
        metadata: Metadata::Ellipsoid {
            centers,
            squared_semi_axes,
            orientation,
        },
        witness,
    })
}

/// Places `prim` into `n`-dimensional space, sending its current ambient
/// coordinate `i` to `mapping[i]`. Untouched coordinates become cylinder
/// directions.
pub fn embed(prim: &Primitive, n: usize, mapping: &[usize]) -> Result<Primitive> {
    let f = prim.f.embed(n, mapping)?;
    let mut witness = vec![Rational::zero(); n];
    for (i, w) in prim.witness.iter().enumerate() {
        witness[mapping[i]] = w.clone();
    }
    Ok(Primitive {
        kind: prim.kind,
        axes: prim.axes.iter().map(|&a| mapping[a]).collect(),
        f,
        component: prim.component.embed(n, mapping)?,
        metadata: prim.metadata.clone(),
        witness,
    })
}

/// Cylinder over a planar primitive: keeps `x1` (index 0) and sends the
/// plane's second coordinate to ambient index `coord` (0-based, `>= 1`).
pub fn embed_plane_primitive(prim: &Primitive, n: usize, coord: usize) -> Result<Primitive> {
    if prim.ambient_dim() != 2 {
        return Err(invalid("embed_plane_primitive expects a planar primitive"));
    }
    if coord == 0 {
        return Err(invalid(
            "the function coordinate x1 is never remapped (coord must be >= 1)",
        ));
    }
    if coord >= n {
        return Err(Error::VariableOutOfRange {
            index: coord,
            num_vars: n,
        });
    }
    embed(prim, n, &[0, coord])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Plus,
    Minus,
    Flat,
}

fn check_increasing(s: &[Rational], len: usize) -> Result<()> {
    if s.len() != len {
        return Err(invalid(format!("expected {len} abscissae, got {}", s.len())));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("abscissae must be strictly increasing"));
    }
    Ok(())
}

fn pt(x: &Rational, y: &Rational) -> [Rational; 2] {
    [x.clone(), y.clone()]
}

/// The planar regions built from lines and one or two hyperbola regions.
///
/// * `Plus`: `x1 >= s11`, `x2 >= 0`, above the line `(s12,0)-(s13,s2)`,
///   inside the `(-inf, s12], 0, s` hyperbola region. Requires
///   `(s13 - s12) s2 = s`.
/// * `Minus`: mirror image; requires `(s11 - s12) s2 = -s`.
/// * `Flat`: `x2 >= 0` between the `[s11, inf), 0, -s` and
///   `(-inf, s12], 0, s` hyperbola regions. `s2` is not used.
pub fn region_r(kind: RegionKind, s1: &[Rational], s2: &Rational, s: &Rational) -> Result<Vec<Primitive>> {
    if !s.is_positive() {
        return Err(invalid(format!("s must be positive, got {s}")));
    }
    let zero = Rational::zero();
    let one = Rational::one();
    match kind {
        RegionKind::Plus | RegionKind::Minus => {
            check_increasing(s1, 3)?;
            if !s2.is_positive() {
                return Err(invalid(format!("s2 must be positive, got {s2}")));
            }
            let (a, b, c) = (&s1[0], &s1[1], &s1[2]);
            if kind == RegionKind::Plus {
                let residual = (c - b) * s2 - s;
                if !residual.is_zero() {
                    return Err(invalid(format!(
                        "(s13, s2) is not on the hyperbola branch: (s13 - s12) s2 - s = {residual}"
                    )));
                }
                Ok(vec![
                    half_plane(pt(a, &zero), pt(a, &one), Side::Plus)?,
                    half_plane(pt(a, &zero), pt(b, &zero), Side::Plus)?,
                    half_plane(pt(b, &zero), pt(c, s2), Side::Plus)?,
                    hyperbola_region(HyperbolaVariant::LeftOf, b.clone(), zero.clone(), s.clone())?,
                ])
            } else {
                let residual = (a - b) * s2 + s;
                if !residual.is_zero() {
                    return Err(invalid(format!(
                        "(s11, s2) is not on the hyperbola branch: (s11 - s12) s2 + s = {residual}"
                    )));
                }
                Ok(vec![
                    half_plane(pt(c, &zero), pt(c, &one), Side::Minus)?,
                    half_plane(pt(b, &zero), pt(c, &zero), Side::Plus)?,
                    half_plane(pt(b, &zero), pt(a, s2), Side::Plus)?,
                    hyperbola_region(HyperbolaVariant::RightOf, b.clone(), zero.clone(), -s.clone())?,
                ])
            }
        }
        RegionKind::Flat => {
            check_increasing(s1, 2)?;
            Ok(vec![
                half_plane(pt(&s1[0], &zero), pt(&s1[1], &zero), Side::Plus)?,
                hyperbola_region(HyperbolaVariant::RightOf, s1[0].clone(), zero.clone(), -s.clone())?,
                hyperbola_region(HyperbolaVariant::LeftOf, s1[1].clone(), zero, s.clone())?,
            ])
        }
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConditionJson {
    pub polynomial: PolynomialJson,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetadataJson {
    Line {
        p1: Vec<RationalJson>,
        p2: Vec<RationalJson>,
        side: Side,
    },
    Hyperbola {
        variant: HyperbolaVariant,
        a: RationalJson,
        b: RationalJson,
        c: RationalJson,
        branch_plus: Vec<SignConditionJson>,
        branch_minus: Vec<SignConditionJson>,
    },
    Ellipsoid {
        centers: Vec<RationalJson>,
        squared_semi_axes: Vec<RationalJson>,
        orientation: Orientation,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveJson {
    pub kind: String,
    pub axes: Vec<usize>,
    pub metadata: MetadataJson,
    pub polynomial: PolynomialJson,
    pub component_descriptor: Vec<SignConditionJson>,
    pub witness: Vec<RationalJson>,
}

fn descriptor_to_json(d: &ComponentDescriptor) -> Vec<SignConditionJson> {
    d.conditions
        .iter()
        .map(|c| SignConditionJson {
            polynomial: (&c.poly).into(),
            sign: c.sign,
        })
        .collect()
}

fn descriptor_from_json(v: &[SignConditionJson]) -> Result<ComponentDescriptor> {
    Ok(ComponentDescriptor {
        conditions: v
            .iter()
            .map(|c| {
                Ok(SignCondition {
                    poly: c.polynomial.to_polynomial()?,
                    sign: c.sign,
                })
            })
            .collect::<Result<_>>()?,
    })
}

fn pair(v: &[RationalJson]) -> Result<[Rational; 2]> {
    let q = rationals_from_json(v)?;
    q.try_into()
        .map_err(|_| Error::Schema("line points need two coordinates".into()))
}

impl From<&Primitive> for PrimitiveJson {
    fn from(p: &Primitive) -> Self {
        let metadata = match &p.metadata {
            Metadata::Line { p1, p2, side } => MetadataJson::Line {
                p1: rationals_to_json(p1),
                p2: rationals_to_json(p2),
                side: *side,
            },
            Metadata::Hyperbola {
                variant,
                a,
                b,
                c,
                branch_plus,
                branch_minus,
            } => MetadataJson::Hyperbola {
                variant: *variant,
                a: a.into(),
                b: b.into(),
                c: c.into(),
                branch_plus: descriptor_to_json(branch_plus),
                branch_minus: descriptor_to_json(branch_minus),
            },
            Metadata::Ellipsoid {
                centers,
                squared_semi_axes,
                orientation,
            } => MetadataJson::Ellipsoid {
                centers: rationals_to_json(centers),
                squared_semi_axes: rationals_to_json(squared_semi_axes),
                orientation: *orientation,
            },
        };
        PrimitiveJson {
            kind: p.kind.tag().to_string(),
            axes: p.axes.clone(),
            metadata,
            polynomial: (&p.f).into(),
            component_descriptor: descriptor_to_json(&p.component),
            witness: rationals_to_json(&p.witness),
        }
    }
}

impl PrimitiveJson {
    pub fn to_primitive(&self) -> Result<Primitive> {
        let f = self.polynomial.to_polynomial()?;
        let (kind, metadata) = match &self.metadata {
            MetadataJson::Line { p1, p2, side } => (
                PrimitiveKind::HalfPlane,
                Metadata::Line {
                    p1: pair(p1)?,
                    p2: pair(p2)?,
                    side: *side,
                },
            ),
            MetadataJson::Hyperbola {
                variant,
                a,
                b,
                c,
                branch_plus,
                branch_minus,
            } => (
                PrimitiveKind::HyperbolaRegion,
                Metadata::Hyperbola {
                    variant: *variant,
                    a: a.to_rational()?,
                    b: b.to_rational()?,
                    c: c.to_rational()?,
                    branch_plus: descriptor_from_json(branch_plus)?,
                    branch_minus: descriptor_from_json(branch_minus)?,
                },
            ),
            MetadataJson::Ellipsoid {
                centers,
                squared_semi_axes,
                orientation,
            } => (
                match orientation {
                    Orientation::Body => PrimitiveKind::EllipsoidBody,
                    Orientation::Hole => PrimitiveKind::EllipsoidHole,
                },
                Metadata::Ellipsoid {
                    centers: rationals_from_json(centers)?,
                    squared_semi_axes: rationals_from_json(squared_semi_axes)?,
                    orientation: *orientation,
                },
            ),
        };
        if kind.tag() != self.kind {
            return Err(Error::Schema(format!(
                "kind {:?} does not match metadata ({})",
                self.kind,
                kind.tag()
            )));
        }
        if self.axes.len() != metadata.local_dim() {
            return Err(Error::Schema("axes length does not match metadata".into()));
        }
        let prim = Primitive {
            kind,
            axes: self.axes.clone(),
            component: descriptor_from_json(&self.component_descriptor)?,
            witness: rationals_from_json(&self.witness)?,
            metadata,
            f,
        };
        let re = prim
            .reexpand()
            .map_err(|e| Error::Schema(format!("primitive axes: {e}")))?;
        if re != prim.f {
            return Err(Error::Schema(format!(
                "metadata re-expands to {re}, polynomial is {}",
                prim.f
            )));
        }
        if prim.witness.len() != prim.ambient_dim() || !prim.f.eval(&prim.witness)?.is_positive() {
            return Err(Error::Schema("primitive witness is not strictly inside".into()));
        }
        Ok(prim)
    }
}
