//! Exact rational matrices and interval-length monomials.
//!
//! The Gramian identities are certified symbolically: entries are kept as
//! `coefficient * L^power` with the interval length L a formal symbol
//! ([`LenTerm`]). Sums only combine terms of matching power, so a
//! product-equals-identity check is an algebraic statement rather than a
//! numeric one.

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};
use num::traits::{One, Zero};

/// Row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        RatMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Rational::zero();
            for k in 0..self.cols {
                acc += self.get(i, k) * rhs.get(k, j);
            }
            acc
        })
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                };
                if *self.get(i, j) != want {
                    return false;
                }
            }
        }
        true
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<RatMatrix> {
        if self.rows != self.cols {
            return Err(Error::Numerical("cannot invert a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or_else(|| Error::Numerical("singular matrix in exact inversion".into()))?;
            if pivot != col {
                for j in 0..n {
                    let tmp = a.get(pivot, j).clone();
                    a.set(pivot, j, a.get(col, j).clone());
                    a.set(col, j, tmp);
                    let tmp = inv.get(pivot, j).clone();
                    inv.set(pivot, j, inv.get(col, j).clone());
                    inv.set(col, j, tmp);
                }
            }
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j) / &p);
                inv.set(col, j, inv.get(col, j) / &p);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    let av = a.get(r, j) - a.get(col, j) * &f;
                    a.set(r, j, av);
                    let iv = inv.get(r, j) - inv.get(col, j) * &f;
                    inv.set(r, j, iv);
                }
            }
        }
        Ok(inv)
    }

    pub fn to_float(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }
}

/// A single monomial `coeff * L^pow` in the symbolic interval length L.
/// Zero coefficients are canonicalized to power 0 so they absorb any power
/// under addition.
#[derive(Clone, Debug, PartialEq)]
pub struct LenTerm {
    coeff: Rational,
    pow: i64,
}

impl LenTerm {
    pub fn new(coeff: Rational, pow: i64) -> Self {
        if coeff.is_zero() {
            Self { coeff, pow: 0 }
        } else {
            Self { coeff, pow }
        }
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn pow(&self) -> i64 {
        self.pow
    }

    pub fn mul(&self, rhs: &LenTerm) -> LenTerm {
        LenTerm::new(&self.coeff * &rhs.coeff, self.pow + rhs.pow)
    }

    /// Sum of two monomials; defined only when the powers agree (or one side
    /// is zero). A mismatch means the caller broke the scale structure.
    pub fn checked_add(&self, rhs: &LenTerm) -> Result<LenTerm> {
        if self.is_zero() {
            return Ok(rhs.clone());
        }
        if rhs.is_zero() {
            return Ok(self.clone());
        }
        if self.pow != rhs.pow {
            return Err(Error::Numerical(format!(
                "scale mismatch: cannot add L^{} to L^{}",
                self.pow, rhs.pow
            )));
        }
        Ok(LenTerm::new(&self.coeff + &rhs.coeff, self.pow))
    }

    /// Numeric value at a concrete interval length.
    pub fn eval(&self, len: f64) -> f64 {
        to_f64(&self.coeff) * len.powi(self.pow as i32)
    }

    pub fn is_one(&self) -> bool {
        self.pow == 0 && self.coeff.is_one()
    }
}

/// Exact product of two square monomial matrices (row-major slices).
pub fn lenmat_mul(a: &[LenTerm], b: &[LenTerm], n: usize) -> Result<Vec<LenTerm>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n * n);
    let mut out = vec![LenTerm::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = LenTerm::zero();
            for k in 0..n {
                acc = acc.checked_add(&a[i * n + k].mul(&b[k * n + j]))?;
            }
            out[i * n + j] = acc;
        }
    }
    Ok(out)
}

/// True iff the monomial matrix is exactly the identity (ones of power 0 on
/// the diagonal, zeros elsewhere).
pub fn lenmat_is_identity(m: &[LenTerm], n: usize) -> bool {
    for i in 0..n {
        for j in 0..n {
            let e = &m[i * n + j];
            if i == j {
                if !e.is_one() {
                    return false;
                }
            } else if !e.is_zero() {
                return false;
            }
        }
    }
    true
}
