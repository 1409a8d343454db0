use super::{rational_to_f64, Polynomial};

/// Double-precision evaluation form of a [`Polynomial`].
///
/// Terms keep the ascending graded-lex order of the source so sums are
/// reproducible bit for bit.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    num_vars: usize,
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect();
                (rational_to_f64(c), factors)
            })
            .collect();
        CompiledPoly {
            num_vars: p.num_vars(),
            terms,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Evaluates at `x`; `x.len()` must equal `num_vars` (checked in debug).
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars);
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(i, e) in factors {
                t *= match e {
                    1 => x[i],
                    2 => x[i] * x[i],
                    _ => x[i].powi(e as i32),
                };
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_exact_on_dyadics() {
        let p = Polynomial::parse("1 - (x1 - 2)*x2 + 3/4*x1^3", 2).unwrap();
        let c = CompiledPoly::new(&p);
        assert_eq!(c.eval(&[0.5, 0.25]), 1.0 + 1.5 * 0.25 + 0.75 * 0.125);
    }
}
