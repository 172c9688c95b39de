//! Reconstructibility Gramians of the integrator chain, their closed-form
//! inverses, and the weighted generalization.
//!
//! For the length-L observation window the Gramian entry in 1-based indices
//! is
//!
//! ```text
//! W[i,j] = -(t0 - t1)^(i+j-1) / ((i-1)! (j-1)! (i+j-1))
//! ```
//!
//! and its inverse has the closed form
//!
//! ```text
//! Winv[i,j] = (i-1)! (j-1)! (i+j-1) / L^(i+j-1)
//!             * C(N+i, N+1-j) C(N+j, N+1-i) C(i+j-2, i-1)^2
//! ```
//!
//! Both are stored scale-separated as exact rational coefficients times a
//! symbolic power of L (see [`LenTerm`]), so the inverse identity and the
//! diagonal-scaling reduction to the Hilbert matrix are checked exactly,
//! independent of the interval. Storage is 0-based; the closed forms above
//! use i = row + 1, j = column + 1.

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{float_conditioning_note, KernelFamily, KernelPoly, KernelSpec};
use crate::poly::RatPoly;
use crate::rational::{binomial, factorial, fraction_string, integer, parity_sign, Rational};
use crate::ratmat::{lenmat_mul, LenTerm, RatMatrix};

/// Transition matrix of the length-(N+1) integrator chain over a time
/// offset `dt`: entry (i, k) = dt^(k-i) / (k-i)! for k >= i, zero below the
/// diagonal. The underlying dynamics matrix is nilpotent, so the series is
/// finite and the entries are closed-form.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub degree: usize,
    pub dt: f64,
    entries: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.entries[(i, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

pub fn transition(degree: usize, dt: f64) -> TransitionMatrix {
    let n = degree + 1;
    let entries = DMatrix::from_fn(n, n, |i, k| {
        if k >= i {
            dt.powi((k - i) as i32) / fact_f64(k - i)
        } else {
            0.0
        }
    });
    TransitionMatrix {
        degree,
        dt,
        entries,
    }
}

fn fact_f64(n: usize) -> f64 {
    factorial(n).to_f64().unwrap_or(f64::INFINITY)
}

/// Monomial integration weight (tau - t0)^m applied inside the Gramian
/// integrals; m = 0 reproduces the unweighted Gramian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightSpec {
    pub exponent: u32,
}

impl WeightSpec {
    pub fn new(exponent: u32) -> Self {
        Self { exponent }
    }

    pub fn none() -> Self {
        Self { exponent: 0 }
    }
}

/// Symmetric matrix with exact scale-separated entries and a floating mirror
/// evaluated at the concrete interval [t0, t1].
#[derive(Clone, Debug)]
pub struct GramianMatrix {
    degree: usize,
    t0: f64,
    t1: f64,
    weight: u32,
    entries: Vec<LenTerm>,
}

/// JSON image: exact entries as "num/den" strings, the power of (t1 - t0)
/// carried by each entry, and the floating mirror, all row-major.
#[derive(Clone, Debug, Serialize)]
pub struct GramianDump {
    #[serde(rename = "N")]
    pub degree: usize,
    pub t0: f64,
    pub t1: f64,
    pub m: u32,
    pub entries_exact: Vec<String>,
    pub len_exponents: Vec<i64>,
    pub entries_float: Vec<f64>,
}

impl GramianMatrix {
    fn new(degree: usize, t0: f64, t1: f64, weight: u32, entries: Vec<LenTerm>) -> Self {
        debug_assert_eq!(entries.len(), (degree + 1) * (degree + 1));
        Self {
            degree,
            t0,
            t1,
            weight,
            entries,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn interval_len(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Exact entry at 0-based (row, col).
    pub fn entry(&self, row: usize, col: usize) -> &LenTerm {
        &self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[LenTerm] {
        &self.entries
    }

    pub fn entry_float(&self, row: usize, col: usize) -> f64 {
        self.entry(row, col).eval(self.interval_len())
    }

    pub fn float_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry_float(i, j))
    }

    pub fn is_symmetric_exact(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    /// Exact product with another matrix of matching dimension; errors if the
    /// scale structure is violated.
    pub fn multiply_exact(&self, rhs: &GramianMatrix) -> Result<Vec<LenTerm>> {
        if self.dim() != rhs.dim() {
            return Err(Error::InvalidSpec("dimension mismatch".into()));
        }
        lenmat_mul(&self.entries, &rhs.entries, self.dim())
    }

    pub fn dump(&self) -> GramianDump {
        GramianDump {
            degree: self.degree,
            t0: self.t0,
            t1: self.t1,
            m: self.weight,
            entries_exact: self
                .entries
                .iter()
                .map(|e| fraction_string(e.coeff()))
                .collect(),
            len_exponents: self.entries.iter().map(|e| e.pow()).collect(),
            entries_float: {
                let l = self.interval_len();
                self.entries.iter().map(|e| e.eval(l)).collect()
            },
        }
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if t1 <= t0 || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "interval endpoints must satisfy t1 > t0, got [{t0}, {t1}]"
        )));
    }
    Ok(())
}

/// Reconstructibility Gramian of the integrator chain over [t0, t1].
pub fn gramian_entries(degree: usize, t0: f64, t1: f64) -> Result<GramianMatrix> {
    check_interval(t0, t1)?;
    let n = degree + 1;
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (i, j) = (row + 1, col + 1);
            let den = factorial(i - 1) * factorial(j - 1) * BigInt::from((i + j - 1) as i64);
            let coeff = Rational::new(BigInt::from(parity_sign(i + j)), den);
            entries.push(LenTerm::new(coeff, (i + j - 1) as i64));
        }
    }
    Ok(GramianMatrix::new(degree, t0, t1, 0, entries))
}

/// Closed-form inverse of the reconstructibility Gramian.
pub fn gramian_inverse_closed(degree: usize, t0: f64, t1: f64) -> Result<GramianMatrix> {
    check_interval(t0, t1)?;
    let n = degree + 1;
    let nn = degree;
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (i, j) = (row + 1, col + 1);
            let b = binomial(nn + i, nn + 1 - j)
                * binomial(nn + j, nn + 1 - i)
                * binomial(i + j - 2, i - 1).pow(2);
            let num = factorial(i - 1) * factorial(j - 1) * BigInt::from((i + j - 1) as i64) * b;
            entries.push(LenTerm::new(
                Rational::from_integer(num),
                -((i + j - 1) as i64),
            ));
        }
    }
    Ok(GramianMatrix::new(degree, t0, t1, 0, entries))
}

/// n x n Hilbert matrix, entries 1/(i+j-1).
pub fn hilbert_matrix(n: usize) -> RatMatrix {
    RatMatrix::from_fn(n, n, |i, j| {
        Rational::new(BigInt::one(), BigInt::from(i + j + 1))
    })
}

/// Exact inverse of the n x n Hilbert matrix:
///
/// ```text
/// Hinv[i,j] = (-1)^(i+j) (i+j-1) C(n-1+i, n-j) C(n-1+j, n-i) C(i+j-2, i-1)^2
/// ```
pub fn hilbert_inverse(n: usize) -> RatMatrix {
    assert!(n >= 1, "Hilbert matrix needs n >= 1");
    RatMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row + 1, col + 1);
        let v = BigInt::from((i + j - 1) as i64)
            * binomial(n - 1 + i, n - j)
            * binomial(n - 1 + j, n - i)
            * binomial(i + j - 2, i - 1).pow(2);
        Rational::from_integer(v * BigInt::from(parity_sign(i + j)))
    })
}

/// Gramian with the extra integration weight (tau - t0)^m:
///
/// ```text
/// Wm[i,j] = int_{t0}^{t1} (tau - t0)^m (tau - t1)^(i+j-2) / ((i-1)!(j-1)!) dtau
/// ```
///
/// computed by expanding (tau - t0)^m binomially about t1, so every entry is
/// an exact rational times L^(m+i+j-1). m = 0 reproduces [`gramian_entries`]
/// entry for entry.
pub fn weighted_gramian(degree: usize, t0: f64, t1: f64, w: WeightSpec) -> Result<GramianMatrix> {
    check_interval(t0, t1)?;
    let m = w.exponent as usize;
    let n = degree + 1;
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (i, j) = (row + 1, col + 1);
            let q = i + j - 2;
            // int_0^L s^m (s - L)^q ds = L^(m+q+1) sum_p C(q,p) (-1)^(q-p) / (m+p+1)
            let mut sum = Rational::zero();
            for p in 0..=q {
                sum += Rational::new(
                    binomial(q, p) * BigInt::from(parity_sign(q - p)),
                    BigInt::from((m + p + 1) as i64),
                );
            }
            let coeff = sum / Rational::from_integer(factorial(i - 1) * factorial(j - 1));
            entries.push(LenTerm::new(coeff, (m + q + 1) as i64));
        }
    }
    Ok(GramianMatrix::new(degree, t0, t1, w.exponent, entries))
}

/// Exact inverse of the weighted Gramian via Gauss-Jordan on the scale-free
/// rational core. Factoring W = L^(m-1) D R D with D = diag(L^i) shows the
/// inverse entry carries L^(1-m-i-j).
pub fn weighted_gramian_inverse(
    degree: usize,
    t0: f64,
    t1: f64,
    w: WeightSpec,
) -> Result<GramianMatrix> {
    let fwd = weighted_gramian(degree, t0, t1, w)?;
    let core_inv = weighted_core_inverse(&fwd)?;
    let n = degree + 1;
    let m = w.exponent as i64;
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (i, j) = (row as i64 + 1, col as i64 + 1);
            entries.push(LenTerm::new(core_inv.get(row, col).clone(), 1 - m - i - j));
        }
    }
    Ok(GramianMatrix::new(degree, t0, t1, w.exponent, entries))
}

fn weighted_core_inverse(fwd: &GramianMatrix) -> Result<RatMatrix> {
    let n = fwd.dim();
    let core = RatMatrix::from_fn(n, n, |i, j| fwd.entry(i, j).coeff().clone());
    core.inverse()
}

/// Estimator kernels produced by the weighted Gramian, one per derivative
/// order, plus an optional conditioning note from the floating mirror.
#[derive(Clone, Debug)]
pub struct WeightedKernels {
    pub kernels: Vec<KernelPoly>,
    pub conditioning: Option<String>,
}

/// Row-j kernel of Wm^-1 applied to the weighted observation integral, as a
/// polynomial of degree N + m in the delay sigma = t - tau:
///
/// ```text
/// K_j(sigma) = sum_k Wm^-1[j+1, k+1] (T - sigma)^m (-sigma)^k / k!
/// ```
///
/// For m = 0 this reproduces the plain Gramian kernel for every order; the
/// exact inverse keeps the construction rational throughout.
pub fn weighted_estimator_kernels(
    degree: usize,
    window: f64,
    w: WeightSpec,
) -> Result<WeightedKernels> {
    if window <= 0.0 || !window.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "window length must be positive and finite, got {window}"
        )));
    }
    let m = w.exponent as usize;
    let n = degree;
    let inv = weighted_gramian_inverse(degree, 0.0, window, w)?;
    // (1 - u)^m expanded once, shifted by u^k per term below.
    let weight_poly = RatPoly::linear_power(&integer(1), &integer(-1), m);
    let mut kernels = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut coeffs = vec![Rational::zero(); n + m + 1];
        for k in 0..=n {
            let rho = inv.entry(j, k).coeff();
            let scale = rho * Rational::new(BigInt::from(parity_sign(k)), factorial(k));
            for (p, wc) in weight_poly.coeffs().iter().enumerate() {
                coeffs[p + k] += wc * &scale;
            }
        }
        let spec = KernelSpec {
            degree,
            order: j,
            window,
        };
        kernels.push(KernelPoly::from_parts(
            spec,
            KernelFamily::Weighted { m: w.exponent },
            RatPoly::new(coeffs),
        ));
    }
    let conditioning = weighted_conditioning(&weighted_gramian(degree, 0.0, window, w)?);
    Ok(WeightedKernels {
        kernels,
        conditioning,
    })
}

fn weighted_conditioning(fwd: &GramianMatrix) -> Option<String> {
    let float = fwd.float_matrix();
    if nalgebra::Cholesky::new(float).is_none() {
        return Some(format!(
            "floating mirror of the weighted Gramian (degree {}, m = {}) is numerically \
             singular; exact results are unaffected",
            fwd.degree(),
            fwd.weight()
        ));
    }
    float_conditioning_note(fwd.degree())
}

/// Numeric inversion of the floating mirror, offered as a diagnostics path
/// next to the exact closed form. Returns the inverse and the conditioning
/// note that applies at this degree.
pub fn float_inverse_diagnostic(g: &GramianMatrix) -> Result<(DMatrix<f64>, Option<String>)> {
    let inv = g
        .float_matrix()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("floating Gramian mirror is singular".into()))?;
    Ok((inv, float_conditioning_note(g.degree())))
}

/// Exact check of the diagonal-scaling reduction: with
/// M = diag((i-1)! / (t0 - t1)^i), the product L * M W M must have the
/// Hilbert entries 1/(i+j-1) with no residual power of L.
pub fn scaling_reduces_to_hilbert(degree: usize) -> Result<bool> {
    let w = gramian_entries(degree, 0.0, 1.0)?;
    let dim = degree + 1;
    let mut scaler = vec![LenTerm::zero(); dim * dim];
    for i in 0..dim {
        // (t0 - t1)^(i+1) = (-1)^(i+1) L^(i+1)
        scaler[i * dim + i] = LenTerm::new(
            Rational::from_integer(factorial(i) * BigInt::from(parity_sign(i + 1))),
            -((i + 1) as i64),
        );
    }
    let mw = lenmat_mul(&scaler, w.entries(), dim)?;
    let mwm = lenmat_mul(&mw, &scaler, dim)?;
    let hilbert = hilbert_matrix(dim);
    for i in 0..dim {
        for j in 0..dim {
            let scaled = mwm[i * dim + j].mul(&LenTerm::new(integer(1), 1));
            if scaled.pow() != 0 || scaled.coeff() != hilbert.get(i, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
