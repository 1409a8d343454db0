//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded-lexicographic with `x1 > x2 > ...`. Iteration order is therefore
//! ascending grlex; printing walks it in reverse so the leading term comes
//! first. Zero coefficients are never stored.

mod compiled;
mod parse;
mod rational;
mod serde_impl;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

pub use compiled::CompiledPoly;
pub use rational::{exact_sqrt, int, parse_rational, rat, rational_to_f64, snap_f64, Rational};
pub use serde_impl::{rationals_from_json, rationals_to_json, PolynomialJson, RationalJson, TermJson};

use crate::error::{Error, Result};
use crate::linalg;

/// Exponent vector of a monomial; one entry per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(num_vars: usize) -> Self {
        Monomial(vec![0; num_vars])
    }

    pub fn var(num_vars: usize, index: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in `num_vars` variables over the rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: Rational) -> Self {
        let mut p = Self::zero(num_vars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(num_vars), c);
        }
        p
    }

    /// The coordinate function `x_{index+1}`.
    ///
    /// Panics if `index >= num_vars`; use [`Polynomial::try_var`] for
    /// untrusted indices.
    pub fn var(num_vars: usize, index: usize) -> Self {
        assert!(index < num_vars, "variable {index} out of range");
        let mut p = Self::zero(num_vars);
        p.terms.insert(Monomial::var(num_vars, index), Rational::one());
        p
    }

    pub fn try_var(num_vars: usize, index: usize) -> Result<Self> {
        if index >= num_vars {
            return Err(Error::VariableOutOfRange { index, num_vars });
        }
        Ok(Self::var(num_vars, index))
    }

    /// Affine form `sum_i coeffs[i] * x_i + constant`.
    pub fn linear(coeffs: &[Rational], constant: Rational) -> Self {
        let n = coeffs.len();
        let mut p = Self::constant(n, constant);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(n, i), c.clone());
        }
        p
    }

    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Self::zero(num_vars);
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: exps.len(),
                });
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Rational {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.num_vars])
    }

    /// Indices of variables that occur with a nonzero coefficient.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    s.insert(i);
                }
            }
        }
        s
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        Polynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, Rational::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    fn check_point_len(&self, len: usize) -> Result<()> {
        if len != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: len,
            });
        }
        Ok(())
    }

    /// Exact value at a rational point.
    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        self.check_point_len(x.len())?;
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Double-precision value; terms are summed in ascending graded-lex order.
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        self.check_point_len(x.len())?;
        Ok(CompiledPoly::new(self).eval(x))
    }

    /// Formal partial derivative with respect to variable `index` (0-based).
    pub fn partial(&self, index: usize) -> Result<Self> {
        if index >= self.num_vars {
            return Err(Error::VariableOutOfRange {
                index,
                num_vars: self.num_vars,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.0[index];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[index] -= 1;
            out.add_term(Monomial(exps), c * Rational::from_integer(e.into()));
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.num_vars)
            .map(|i| self.partial(i).expect("index in range"))
            .collect()
    }

    /// Substitutes `x_i <- value`, keeping the variable count.
    pub fn substitute(&self, index: usize, value: &Rational) -> Result<Self> {
        if index >= self.num_vars {
            return Err(Error::VariableOutOfRange {
                index,
                num_vars: self.num_vars,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            let mut exps = m.0.clone();
            let e = std::mem::replace(&mut exps[index], 0);
            out.add_term(Monomial(exps), c * num_traits::pow(value.clone(), e as usize));
        }
        Ok(out)
    }

    /// Renames variable `i` to `mapping[i]` in a ring of `new_num_vars`
    /// variables. The mapping must be injective.
    pub fn embed(&self, new_num_vars: usize, mapping: &[usize]) -> Result<Self> {
        self.check_point_len(mapping.len())?;
        let mut seen = BTreeSet::new();
        for &t in mapping {
            if t >= new_num_vars {
                return Err(Error::VariableOutOfRange {
                    index: t,
                    num_vars: new_num_vars,
                });
            }
            if !seen.insert(t) {
                return Err(Error::InvalidInput(format!(
                    "variable mapping is not injective (target {t} repeated)"
                )));
            }
        }
        let mut out = Self::zero(new_num_vars);
        for (m, c) in &self.terms {
            let mut exps = vec![0; new_num_vars];
            for (i, &e) in m.0.iter().enumerate() {
                exps[mapping[i]] = e;
            }
            out.add_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Returns `p o T` where `T(x) = A x + b`. `A` is given row-major and must
    /// be invertible.
    pub fn affine_subst(&self, a: &[Vec<Rational>], b: &[Rational]) -> Result<Self> {
        let n = self.num_vars;
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len().min(b.len()),
            });
        }
        if let Some(row) = a.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        if linalg::exact_rank(a) != n {
            return Err(Error::SingularTransform);
        }
        let images: Vec<Polynomial> = a
            .iter()
            .zip(b)
            .map(|(row, bi)| Polynomial::linear(row, bi.clone()))
            .collect();
        let mut powers: Vec<Vec<Polynomial>> = images
            .iter()
            .map(|img| vec![Polynomial::constant(n, Rational::one()), img.clone()])
            .collect();
        let mut out = Self::zero(n);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(n, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e as usize];
            }
            out = &out + &t;
        }
        Ok(out)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial ring mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial ring mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial ring mismatch");
        let mut out = Polynomial::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: &Polynomial) -> Polynomial {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parse::to_text(self))
    }
}

impl Polynomial {
    /// Parses the text grammar (`x1..xk`, integer or `p/q` literals,
    /// `+ - * ^ ( )`) into a polynomial in `num_vars` variables.
    pub fn parse(text: &str, num_vars: usize) -> Result<Self> {
        parse::parse(text, num_vars)
    }

    /// Like [`Polynomial::parse`] with `num_vars` taken from the largest
    /// variable index that occurs (at least 1).
    pub fn parse_infer(text: &str) -> Result<Self> {
        let n = parse::max_var_index(text)?.max(1);
        parse::parse(text, n)
    }
}
