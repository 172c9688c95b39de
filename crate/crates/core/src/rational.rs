//! Exact rational scalars and combinatorial helpers.
//!
//! Every kernel and Gramian coefficient in this crate is carried as a
//! [`Rational`]: `num`'s arbitrary-precision ratio, kept reduced with a
//! positive denominator by construction, so +, -, *, / never round.
//! Factorials and binomials are computed in unbounded integers; no lookup
//! table caps the model degree.

use num::bigint::BigInt;
use num::traits::ToPrimitive;

/// Arbitrary-precision rational number, always in lowest terms.
pub type Rational = num::BigRational;

/// `num/den` as a reduced rational. `den` must be nonzero.
pub fn ratio(num: i64, den: i64) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer `n` as a rational.
pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// n! as an unbounded integer.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut num = BigInt::from(1);
    for i in 0..k {
        num *= BigInt::from(n - i);
    }
    num / factorial(k)
}

/// (-1)^n.
pub fn parity_sign(n: usize) -> i64 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Nearest f64; used for float mirrors and tap weights.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// "num/den" string with the sign on the numerator.
pub fn fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_reduce_and_normalize_sign() {
        let r = ratio(4, -6);
        assert_eq!(r.numer(), &BigInt::from(-2));
        assert_eq!(r.denom(), &BigInt::from(3));
        assert_eq!(fraction_string(&r), "-2/3");
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = ratio(1, 3);
        let sum = &third + &third + &third;
        assert_eq!(sum, integer(1));
    }

    #[test]
    fn factorials_and_binomials() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(6), BigInt::from(720));
        assert_eq!(binomial(6, 2), BigInt::from(15));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        // 22! exceeds u64; must still be exact.
        assert_eq!(factorial(22).to_string(), "1124000727777607680000");
    }

    #[test]
    fn f64_conversion() {
        assert_eq!(to_f64(&ratio(1, 2)), 0.5);
        assert!((to_f64(&ratio(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
    }
}
