//! Construction and cross-verification of the two convolution-kernel
//! families behind finite-window derivative estimation.
//!
//! A kernel is stored window-normalized: with u = sigma/T,
//!
//! ```text
//! kernel(sigma) = T^-(j+1) * sum_k c_k u^k
//! ```
//!
//! where the rational coefficients c_k do not depend on the window length T.
//! Two independent constructions are provided: the `Algebraic` family comes
//! from expanding a double sum over binomial terms in (T - tau) and (-tau);
//! the `Gramian` family comes from a single sum derived through the
//! reconstructibility Gramian of the integrator chain. Both are deadbeat on
//! degree-N polynomial signals, and [`equivalence_report`] certifies that
//! the two coefficient lists agree exactly.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RatPoly;
use crate::rational::{binomial, factorial, fraction_string, parity_sign, Rational};
use crate::ratmat::RatMatrix;

/// Degree cap recommended for floating pipelines; normalized coefficients
/// grow like Hilbert-inverse entries (about 4^(2N)), which costs roughly
/// 1.2N decimal digits of the 15 available in f64. Exact paths are uncapped.
pub const FLOAT_DEGREE_CAP: usize = 12;

/// Conditioning note for floating pipelines at high degree; `None` below
/// degree 9.
pub fn float_conditioning_note(degree: usize) -> Option<String> {
    if degree >= 9 {
        Some(format!(
            "degree {degree} kernels have Hilbert-scale coefficients; \
             floating results lose roughly {} significant digits",
            (degree as f64 * 1.2).round() as usize
        ))
    } else {
        None
    }
}

/// Which construction produced a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    /// Double-sum construction (operational-calculus route).
    Algebraic,
    /// Single-sum construction (reconstructibility-Gramian route).
    Gramian,
    /// Gramian route with the extra integration weight (tau - t0)^m.
    Weighted { m: u32 },
}

impl KernelFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            KernelFamily::Algebraic => "algebraic",
            KernelFamily::Gramian => "gramian",
            KernelFamily::Weighted { .. } => "weighted",
        }
    }
}

/// Model degree N, derivative order j and window length T of an estimator
/// kernel. `0 <= j <= N` and `T > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub degree: usize,
    pub order: usize,
    pub window: f64,
}

impl KernelSpec {
    pub fn new(degree: usize, order: usize, window: f64) -> Result<Self> {
        if order > degree {
            return Err(Error::InvalidSpec(format!(
                "derivative order {order} exceeds model degree {degree}"
            )));
        }
        if window <= 0.0 || !window.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "window length must be positive and finite, got {window}"
            )));
        }
        Ok(Self {
            degree,
            order,
            window,
        })
    }
}

/// A degree-N estimator kernel in exact window-normalized coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelPoly {
    pub spec: KernelSpec,
    pub family: KernelFamily,
    pub(crate) poly: RatPoly,
}

/// Exact JSON image of a kernel; coefficients are decimal strings so no
/// precision is lost in transit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelDump {
    pub family: String,
    #[serde(rename = "N")]
    pub degree: usize,
    pub j: usize,
    pub coeffs_num: Vec<String>,
    pub coeffs_den: Vec<String>,
    pub convention: String,
}

pub const KERNEL_DUMP_CONVENTION: &str = "kernel(sigma)=T^-(j+1) * sum_k c_k (sigma/T)^k";

impl KernelPoly {
    /// Kernel from the double-sum construction.
    ///
    /// The bivariate polynomial in (T, tau) is expanded exactly and collapsed
    /// to normalized coefficients; `algebraic_bivariate` documents the term
    /// layout.
    pub fn algebraic(spec: &KernelSpec) -> KernelPoly {
        let n = spec.degree;
        let terms = algebraic_bivariate(n, spec.order);
        let mut coeffs = vec![Rational::zero(); n + 1];
        for ((t_pow, tau_pow), c) in terms {
            debug_assert_eq!(t_pow + tau_pow, n);
            coeffs[tau_pow] += c;
        }
        KernelPoly {
            spec: *spec,
            family: KernelFamily::Algebraic,
            poly: RatPoly::new(coeffs),
        }
    }

    /// Kernel from the single-sum Gramian construction:
    ///
    /// ```text
    /// c_k = (N+j+1)! / (j! (N-j)!) * (-1)^k (N+k+1)! / ((j+k+1) (N-k)! (k!)^2)
    /// ```
    pub fn gramian(spec: &KernelSpec) -> KernelPoly {
        let n = spec.degree;
        let j = spec.order;
        let pref = Rational::new(factorial(n + j + 1), factorial(j) * factorial(n - j));
        let coeffs: Vec<Rational> = (0..=n)
            .map(|k| {
                let num = factorial(n + k + 1) * BigInt::from(parity_sign(k));
                let den = BigInt::from((j + k + 1) as i64)
                    * factorial(n - k)
                    * factorial(k)
                    * factorial(k);
                &pref * Rational::new(num, den)
            })
            .collect();
        KernelPoly {
            spec: *spec,
            family: KernelFamily::Gramian,
            poly: RatPoly::new(coeffs),
        }
    }

    pub(crate) fn from_parts(spec: KernelSpec, family: KernelFamily, poly: RatPoly) -> Self {
        KernelPoly { spec, family, poly }
    }

    /// Window-normalized coefficients c_0..c_d (d = N for the plain
    /// families, N + m for weighted kernels).
    pub fn coeffs(&self) -> &[Rational] {
        self.poly.coeffs()
    }

    /// Floating kernel value at `sigma`, which must lie in [0, T].
    pub fn eval(&self, sigma: f64) -> Result<f64> {
        let t = self.spec.window;
        if !(0.0..=t).contains(&sigma) {
            return Err(Error::OutOfRange(format!(
                "sigma = {sigma} outside the kernel window [0, {t}]"
            )));
        }
        let prefactor = t.powi(-(self.spec.order as i32) - 1);
        Ok(self.poly.eval_f64(sigma / t) * prefactor)
    }

    pub fn dump(&self) -> KernelDump {
        KernelDump {
            family: self.family.tag().to_string(),
            degree: self.spec.degree,
            j: self.spec.order,
            coeffs_num: self
                .coeffs()
                .iter()
                .map(|c| c.numer().to_string())
                .collect(),
            coeffs_den: self
                .coeffs()
                .iter()
                .map(|c| c.denom().to_string())
                .collect(),
            convention: KERNEL_DUMP_CONVENTION.to_string(),
        }
    }
}

/// Exact bivariate expansion of the double-sum kernel numerator, keyed by
/// (power of T, power of tau). The full kernel is the returned polynomial
/// divided by T^(N+j+1); every key satisfies t_pow + tau_pow = N, which is
/// what [`reflection_holds`] checks.
fn algebraic_bivariate(degree: usize, order: usize) -> BTreeMap<(usize, usize), Rational> {
    let n = degree;
    let j = order;
    let pref = factorial(n + j + 1) * factorial(n + 1);
    let mut terms: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for k1 in 0..=(n - j) {
        for k2 in 0..=j {
            let a = k1 + k2;
            let den = factorial(k1)
                * factorial(k2)
                * factorial(n - j - k1)
                * factorial(j - k2)
                * factorial(n - a)
                * factorial(a)
                * BigInt::from((n - k1 + 1) as i64);
            let c = Rational::new(pref.clone(), den);
            // (T - tau)^a (-tau)^(n-a) = sum_p C(a,p) (-1)^(n-p) T^p tau^(n-p)
            for p in 0..=a {
                let term =
                    &c * Rational::from_integer(binomial(a, p) * BigInt::from(parity_sign(n - p)));
                let slot = terms.entry((p, n - p)).or_insert_with(Rational::zero);
                *slot += term;
            }
        }
    }
    terms.retain(|_, c| !c.is_zero());
    terms
}

/// First coefficient index where two kernels differ, with both exact values.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMismatch {
    pub index: usize,
    pub left: String,
    pub right: String,
}

pub fn compare_coefficients(left: &KernelPoly, right: &KernelPoly) -> Option<CoeffMismatch> {
    let la = left.coeffs();
    let ra = right.coeffs();
    let len = la.len().max(ra.len());
    let zero = Rational::zero();
    for k in 0..len {
        let l = la.get(k).unwrap_or(&zero);
        let r = ra.get(k).unwrap_or(&zero);
        if l != r {
            return Some(CoeffMismatch {
                index: k,
                left: fraction_string(l),
                right: fraction_string(r),
            });
        }
    }
    None
}

/// Per-order verdict of the family comparison.
#[derive(Clone, Debug)]
pub struct OrderVerdict {
    pub order: usize,
    pub equal: bool,
    pub mismatch: Option<CoeffMismatch>,
}

/// Result of comparing the two families coefficient-by-coefficient for every
/// derivative order at a given model degree.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub degree: usize,
    pub verdicts: Vec<OrderVerdict>,
}

impl EquivalenceReport {
    pub fn all_equal(&self) -> bool {
        self.verdicts.iter().all(|v| v.equal)
    }
}

/// Builds both kernels at unit window (the coefficients are T-free) and
/// compares the rational coefficient lists exactly for every order
/// j = 0..=degree. A mismatch is reported, not raised.
pub fn equivalence_report(degree: usize) -> EquivalenceReport {
    let verdicts = (0..=degree)
        .map(|order| {
            let spec = KernelSpec {
                degree,
                order,
                window: 1.0,
            };
            let mismatch =
                compare_coefficients(&KernelPoly::algebraic(&spec), &KernelPoly::gramian(&spec));
            OrderVerdict {
                order,
                equal: mismatch.is_none(),
                mismatch,
            }
        })
        .collect();
    EquivalenceReport { degree, verdicts }
}

/// Exact moment of a kernel against the monomial (-sigma)^k / k!, computed
/// at unit window. Off-diagonal moments vanish on the model class, which
/// makes the full matrix T-independent.
pub fn kernel_moment(kernel: &KernelPoly, k: usize) -> Rational {
    let mut integral = Rational::zero();
    for (i, c) in kernel.coeffs().iter().enumerate() {
        integral += c / crate::rational::integer((i + k + 1) as i64);
    }
    integral * Rational::new(BigInt::from(parity_sign(k)), factorial(k))
}

/// Matrix of kernel moments: entry (j, k) integrates the order-j kernel
/// against (-sigma)^k / k!. Deadbeat exactness on degree-N polynomials is
/// equivalent to this being the identity.
pub fn moment_matrix(family: KernelFamily, degree: usize) -> Result<RatMatrix> {
    let build = match family {
        KernelFamily::Algebraic => KernelPoly::algebraic,
        KernelFamily::Gramian => KernelPoly::gramian,
        KernelFamily::Weighted { .. } => {
            return Err(Error::InvalidSpec(
                "moment_matrix covers the algebraic and gramian families; \
                 weighted kernels are checked per kernel via kernel_moment"
                    .into(),
            ))
        }
    };
    let n = degree;
    Ok(RatMatrix::from_fn(n + 1, n + 1, |j, k| {
        let spec = KernelSpec {
            degree: n,
            order: j,
            window: 1.0,
        };
        kernel_moment(&build(&spec), k)
    }))
}

/// Checks the window-reflection identity on the double-sum kernel: negating
/// both the window and the argument flips the kernel sign by (-1)^j. The
/// substitution is performed on the exact bivariate form, so this fails if
/// the expansion ever produced a term of total degree other than N.
pub fn reflection_holds(spec: &KernelSpec) -> bool {
    let n = spec.degree;
    let j = spec.order;
    let terms = algebraic_bivariate(n, j);
    for ((t_pow, tau_pow), c) in &terms {
        // lhs: (-1) * H(-T, -tau) picks up (-1)^(t_pow + tau_pow + 1) from the
        // numerator and (-1)^(N+j+1) from the T^(N+j+1) denominator.
        let lhs_sign = parity_sign(t_pow + tau_pow + 1 + n + j + 1);
        let rhs_sign = parity_sign(j);
        let lhs = c * Rational::from_integer(BigInt::from(lhs_sign));
        let rhs = c * Rational::from_integer(BigInt::from(rhs_sign));
        if lhs != rhs {
            return false;
        }
    }
    true
}
