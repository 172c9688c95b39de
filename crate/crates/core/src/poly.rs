//! Dense univariate polynomials with rational coefficients.
//!
//! Kernels are stored window-normalized in the variable u = sigma/T on
//! [0, 1]; tap generation and moment checks reduce to closed-form integrals
//! of these polynomials between rational bounds.

use crate::rational::{binomial, to_f64, Rational};
use num::traits::Zero;

/// Coefficients in ascending powers: `coeffs[k]` multiplies u^k.
#[derive(Clone, Debug, PartialEq)]
pub struct RatPoly {
    coeffs: Vec<Rational>,
}

impl RatPoly {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "polynomial needs at least one coefficient"
        );
        Self { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![Rational::zero(); len.max(1)])
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// (a + b·u)^m expanded binomially.
    pub fn linear_power(a: &Rational, b: &Rational, m: usize) -> Self {
        let mut coeffs = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let c =
                Rational::from_integer(binomial(m, k)) * pow_nonneg(a, m - k) * pow_nonneg(b, k);
            coeffs.push(c);
        }
        Self::new(coeffs)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let len = self.len().max(other.len());
        let mut coeffs = vec![Rational::zero(); len];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        RatPoly::new(coeffs)
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        let mut coeffs = vec![Rational::zero(); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RatPoly::new(coeffs)
    }

    pub fn scale(&self, factor: &Rational) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Exact Horner evaluation.
    pub fn eval(&self, u: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// Horner evaluation on f64-converted coefficients.
    pub fn eval_f64(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * u + to_f64(c))
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> RatPoly {
        let mut coeffs = Vec::with_capacity(self.len() + 1);
        coeffs.push(Rational::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / crate::rational::integer((k + 1) as i64));
        }
        RatPoly::new(coeffs)
    }

    /// Exact definite integral over [lo, hi].
    pub fn integrate(&self, lo: &Rational, hi: &Rational) -> Rational {
        let anti = self.antiderivative();
        anti.eval(hi) - anti.eval(lo)
    }
}

fn pow_nonneg(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::from_integer(1.into());
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{integer, ratio};

    #[test]
    fn linear_power_expands() {
        // (1 - u)^2 = 1 - 2u + u^2
        let p = RatPoly::linear_power(&integer(1), &integer(-1), 2);
        assert_eq!(p.coeffs(), &[integer(1), integer(-2), integer(1)]);
    }

    #[test]
    fn integration_is_exact() {
        // int_0^1 (6 - 12u) du = 0 and int_0^1 (6 - 12u) u du = -1
        let p = RatPoly::new(vec![integer(6), integer(-12)]);
        assert_eq!(p.integrate(&integer(0), &integer(1)), integer(0));
        let pu = p.mul(&RatPoly::new(vec![integer(0), integer(1)]));
        assert_eq!(pu.integrate(&integer(0), &integer(1)), integer(-1));
    }

    #[test]
    fn eval_matches_f64_path() {
        let p = RatPoly::new(vec![ratio(1, 2), ratio(-3, 4), integer(2)]);
        let exact = p.eval(&ratio(1, 3));
        assert!((p.eval_f64(1.0 / 3.0) - crate::rational::to_f64(&exact)).abs() < 1e-15);
    }
}
