//! Text form of polynomials.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' INT)?
//! atom   := INT ('/' INT)? | 'x' INT | '(' expr ')'
//! ```
//!
//! Variables are 1-based (`x1` is index 0). Printing emits terms in
//! descending graded-lex order, which this parser reads back exactly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{Monomial, Polynomial, Rational};
use crate::error::{Error, Result};

pub(super) fn to_text(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = monomial_text(m);
        if mono.is_empty() {
            out.push_str(&rational_text(&mag));
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&rational_text(&mag));
            out.push('*');
            out.push_str(&mono);
        }
    }
    out
}

fn rational_text(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn monomial_text(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exponents().iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("x{}", i + 1)),
            _ => parts.push(format!("x{}^{}", i + 1, e)),
        }
    }
    parts.join("*")
}

pub(super) fn max_var_index(text: &str) -> Result<usize> {
    let mut lx = Lexer::new(text);
    let mut max = 0;
    loop {
        match lx.next()? {
            Tok::End => return Ok(max),
            Tok::Var(i) => max = max.max(i),
            _ => {}
        }
    }
}

pub(super) fn parse(text: &str, num_vars: usize) -> Result<Polynomial> {
    let mut ps = Parser {
        lx: Lexer::new(text),
        peeked: None,
        num_vars,
    };
    let p = ps.expr()?;
    match ps.peek()? {
        (Tok::End, _) => Ok(p),
        (t, pos) => Err(Error::Parse {
            pos,
            msg: format!("unexpected {t:?}"),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    fn next(&mut self) -> Result<Tok> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let Some(&c) = self.src.get(self.pos) else {
            return Ok(Tok::End);
        };
        let start = self.pos;
        let single = |t| Ok(t);
        self.pos += 1;
        match c {
            b'+' => single(Tok::Plus),
            b'-' => single(Tok::Minus),
            b'*' => single(Tok::Star),
            b'/' => single(Tok::Slash),
            b'^' => single(Tok::Caret),
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b'x' => {
                let d = self.digits();
                let idx: usize = d.parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: "expected variable index after 'x'".into(),
                })?;
                if idx == 0 {
                    return Err(Error::Parse {
                        pos: start,
                        msg: "variables are numbered from x1".into(),
                    });
                }
                Ok(Tok::Var(idx))
            }
            b'0'..=b'9' => {
                self.pos -= 1;
                let d = self.digits();
                Ok(Tok::Int(d.parse().expect("digits parse as integer")))
            }
            _ => Err(Error::Parse {
                pos: start,
                msg: format!("unexpected character {:?}", c as char),
            }),
        }
    }
}

struct Parser<'a> {
    lx: Lexer<'a>,
    peeked: Option<(Tok, usize)>,
    num_vars: usize,
}

impl Parser<'_> {
    fn peek(&mut self) -> Result<(Tok, usize)> {
        if self.peeked.is_none() {
            let pos = self.lx.pos;
            let t = self.lx.next()?;
            self.peeked = Some((t, pos));
        }
        Ok(self.peeked.clone().expect("just filled"))
    }

    fn bump(&mut self) -> Result<(Tok, usize)> {
        let t = self.peek()?;
        self.peeked = None;
        Ok(t)
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek()?.0 {
                Tok::Plus => {
                    self.bump()?;
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.peek()?.0 == Tok::Star {
            self.bump()?;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek()?.0 {
            Tok::Minus => {
                self.bump()?;
                Ok(-self.unary()?)
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek()?.0 != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        match self.bump()? {
            (Tok::Int(e), pos) => {
                let e: u32 = e.try_into().map_err(|_| Error::Parse {
                    pos,
                    msg: "exponent too large".into(),
                })?;
                Ok(base.pow(e))
            }
            (t, pos) => Err(Error::Parse {
                pos,
                msg: format!("expected non-negative integer exponent, found {t:?}"),
            }),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        match self.bump()? {
            (Tok::Int(n), _) => {
                let mut q = Rational::from_integer(n);
                if self.peek()?.0 == Tok::Slash {
                    self.bump()?;
                    match self.bump()? {
                        (Tok::Int(d), pos) => {
                            if d.is_zero() {
                                return Err(Error::Parse {
                                    pos,
                                    msg: "zero denominator".into(),
                                });
                            }
                            q /= Rational::from_integer(d);
                        }
                        (t, pos) => {
                            return Err(Error::Parse {
                                pos,
                                msg: format!("expected denominator, found {t:?}"),
                            })
                        }
                    }
                }
                Ok(Polynomial::constant(self.num_vars, q))
            }
            (Tok::Var(i), pos) => {
                if i > self.num_vars {
                    return Err(Error::Parse {
                        pos,
                        msg: format!("x{i} exceeds the {} declared variables", self.num_vars),
                    });
                }
                Ok(Polynomial::var(self.num_vars, i - 1))
            }
            (Tok::LParen, _) => {
                let inner = self.expr()?;
                match self.bump()? {
                    (Tok::RParen, _) => Ok(inner),
                    (t, pos) => Err(Error::Parse {
                        pos,
                        msg: format!("expected ')', found {t:?}"),
                    }),
                }
            }
            (t, pos) => Err(Error::Parse {
                pos,
                msg: format!("unexpected {t:?}"),
            }),
        }
    }
}
