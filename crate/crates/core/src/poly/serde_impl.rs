//! JSON shapes for rationals and polynomials.
//!
//! Rationals are `{"num": "<int>", "den": "<int>"}` with decimal strings so
//! that arbitrarily large values survive exactly. Polynomials carry both the
//! text form and the sparse term list; on input the two must agree.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{Polynomial, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalJson {
    fn from(q: &Rational) -> Self {
        RationalJson {
            num: q.numer().to_string(),
            den: q.denom().to_string(),
        }
    }
}

impl RationalJson {
    pub fn to_rational(&self) -> Result<Rational> {
        let num: BigInt = self
            .num
            .parse()
            .map_err(|_| Error::Schema(format!("bad numerator {:?}", self.num)))?;
        let den: BigInt = self
            .den
            .parse()
            .map_err(|_| Error::Schema(format!("bad denominator {:?}", self.den)))?;
        if den.is_zero() || den.is_negative() {
            return Err(Error::Schema(format!("denominator must be positive, got {den}")));
        }
        let q = Rational::new(num.clone(), den.clone());
        if *q.numer() != num || *q.denom() != den {
            return Err(Error::Schema(format!("rational {num}/{den} is not in lowest terms")));
        }
        Ok(q)
    }
}

pub fn rationals_to_json(v: &[Rational]) -> Vec<RationalJson> {
    v.iter().map(RationalJson::from).collect()
}

pub fn rationals_from_json(v: &[RationalJson]) -> Result<Vec<Rational>> {
    v.iter().map(RationalJson::to_rational).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coef: RationalJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub num_vars: usize,
    pub text: String,
    /// Descending graded-lex order, matching the text.
    pub terms: Vec<TermJson>,
}

impl From<&Polynomial> for PolynomialJson {
    fn from(p: &Polynomial) -> Self {
        PolynomialJson {
            num_vars: p.num_vars(),
            text: p.to_string(),
            terms: p
                .terms()
                .rev()
                .map(|(m, c)| TermJson {
                    exponents: m.exponents().to_vec(),
                    coef: c.into(),
                })
                .collect(),
        }
    }
}

impl PolynomialJson {
    pub fn to_polynomial(&self) -> Result<Polynomial> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.exponents.clone(), t.coef.to_rational()?)))
            .collect::<Result<Vec<_>>>()?;
        let p = Polynomial::from_terms(self.num_vars, terms)
            .map_err(|e| Error::Schema(format!("polynomial terms: {e}")))?;
        let from_text = Polynomial::parse(&self.text, self.num_vars)
            .map_err(|e| Error::Schema(format!("polynomial text {:?}: {e}", self.text)))?;
        if from_text != p {
            return Err(Error::Schema(format!(
                "polynomial text {:?} disagrees with its term list",
                self.text
            )));
        }
        Ok(p)
    }
}
