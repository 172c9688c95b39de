//! Deterministic test signals, seeded noise and error metrics.
//!
//! Polynomial generation uses the factorial-normalized convention
//! y(t) = sum_i a_i t^i / i!, so coefficient a_i equals the i-th derivative
//! at zero. Noise streams come from ChaCha12 keyed by the 64-bit seed;
//! identical specs produce bit-identical streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::series::{aligned_overlap, SignalSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Uniform,
    Gaussian,
}

/// Reproducible additive noise: `Uniform` draws from [-magnitude, magnitude],
/// `Gaussian` uses magnitude as the standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub magnitude: f64,
    pub seed: u64,
}

/// Samples y(t) = sum_i `coeffs[i]` t^i / i! on a uniform grid of `n` points.
pub fn polynomial_series(coeffs: &[f64], t0: f64, dt: f64, n: usize) -> Result<SignalSeries> {
    if coeffs.is_empty() {
        return Err(Error::Config("need at least one coefficient".into()));
    }
    let mut scaled = Vec::with_capacity(coeffs.len());
    let mut fact = 1.0;
    for (i, &a) in coeffs.iter().enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        scaled.push(a / fact);
    }
    let values = (0..n)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            scaled.iter().rev().fold(0.0, |acc, &c| acc * t + c)
        })
        .collect();
    SignalSeries::new(t0, dt, values)
}

/// Samples amplitude * sin(omega t + phase).
pub fn sine_series(
    amplitude: f64,
    omega: f64,
    phase: f64,
    t0: f64,
    dt: f64,
    n: usize,
) -> Result<SignalSeries> {
    let values = (0..n)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            amplitude * (omega * t + phase).sin()
        })
        .collect();
    SignalSeries::new(t0, dt, values)
}

/// Adds a seeded noise stream to the series. Zero magnitude returns the
/// input unchanged (and consumes no random numbers).
pub fn add_noise(s: &SignalSeries, spec: &NoiseSpec) -> SignalSeries {
    if spec.magnitude == 0.0 {
        return s.clone();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = match spec.kind {
        NoiseKind::Uniform => s
            .values()
            .iter()
            .map(|v| v + rng.gen_range(-spec.magnitude..=spec.magnitude))
            .collect(),
        NoiseKind::Gaussian => {
            let dist = Normal::new(0.0, spec.magnitude).expect("finite std dev");
            s.values()
                .iter()
                .map(|v| v + dist.sample(&mut rng))
                .collect()
        }
    };
    SignalSeries::new(s.t0(), s.dt(), values).expect("grid unchanged")
}

/// Standard comparison metrics over the aligned overlap of two series.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ErrorMetrics {
    pub rmse: f64,
    pub max_abs: f64,
    pub mean: f64,
}

/// Metrics of `estimate - truth`; the grids must share step and phase (the
/// usual case after trimming the estimator warm-up).
pub fn error_metrics(estimate: &SignalSeries, truth: &SignalSeries) -> Result<ErrorMetrics> {
    let (ra, rb) = aligned_overlap(estimate, truth)?;
    let diffs: Vec<f64> = estimate.values()[ra]
        .iter()
        .zip(&truth.values()[rb])
        .map(|(&e, &t)| e - t)
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let max_abs = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(ErrorMetrics {
        rmse,
        max_abs,
        mean,
    })
}

/// Population standard deviation; used by the simulation study to express
/// noise gain.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_uses_factorial_convention() {
        // a = (0, 0, 2) means y(t) = 2 t^2 / 2! = t^2, so y(1) = 1.
        let s = polynomial_series(&[0.0, 0.0, 2.0], 0.0, 0.5, 3).unwrap();
        assert_eq!(s.values()[2], 1.0);
        let lin = polynomial_series(&[2.0, 3.0], 0.0, 0.5, 3).unwrap();
        assert_eq!(lin.values(), &[2.0, 3.5, 5.0]);
        let zero = polynomial_series(&[0.0], 0.0, 0.1, 4).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_matches_library_oracle() {
        let s = sine_series(1.0, 1.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2, 3).unwrap();
        assert_eq!(s.values()[0], 0.0);
        assert!((s.values()[1] - 1.0).abs() < 1e-15);
        let one = sine_series(1.0, 1.0, 0.0, 1.0, 0.1, 1).unwrap();
        assert!((one.values()[0] - 1.0f64.sin()).abs() < 1e-15);
        assert!((one.values()[0] - 0.841471).abs() < 1e-6);
    }

    #[test]
    fn zero_magnitude_noise_is_identity() {
        let s = polynomial_series(&[1.0, 2.0], 0.0, 0.1, 50).unwrap();
        let spec = NoiseSpec {
            kind: NoiseKind::Uniform,
            magnitude: 0.0,
            seed: 123,
        };
        assert_eq!(add_noise(&s, &spec), s);
    }

    #[test]
    fn same_seed_same_stream() {
        let s = SignalSeries::new(0.0, 0.1, vec![0.0; 64]).unwrap();
        for kind in [NoiseKind::Uniform, NoiseKind::Gaussian] {
            let spec = NoiseSpec {
                kind,
                magnitude: 0.3,
                seed: 99,
            };
            let a = add_noise(&s, &spec);
            let b = add_noise(&s, &spec);
            assert_eq!(a, b);
            let other = add_noise(&s, &NoiseSpec { seed: 100, ..spec });
            assert_ne!(a, other);
        }
    }

    #[test]
    fn uniform_noise_mean_is_centered() {
        let s = SignalSeries::new(0.0, 1.0, vec![0.0; 100_000]).unwrap();
        let eps = 0.25;
        let noisy = add_noise(
            &s,
            &NoiseSpec {
                kind: NoiseKind::Uniform,
                magnitude: eps,
                seed: 2024,
            },
        );
        let mean = noisy.values().iter().sum::<f64>() / noisy.len() as f64;
        assert!(mean.abs() <= 0.01 * eps, "mean {mean} drifted");
    }

    #[test]
    fn metrics_golden_cases() {
        let truth = SignalSeries::new(0.0, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let same = error_metrics(&truth, &truth).unwrap();
        assert_eq!(
            same,
            ErrorMetrics {
                rmse: 0.0,
                max_abs: 0.0,
                mean: 0.0
            }
        );
        let shifted = SignalSeries::new(0.0, 1.0, vec![2.0, 3.0, 4.0]).unwrap();
        let m = error_metrics(&shifted, &truth).unwrap();
        assert_eq!(
            m,
            ErrorMetrics {
                rmse: 1.0,
                max_abs: 1.0,
                mean: 1.0
            }
        );
        let zeros = SignalSeries::new(0.0, 1.0, vec![0.0, 0.0]).unwrap();
        let pm = SignalSeries::new(0.0, 1.0, vec![1.0, -1.0]).unwrap();
        let m = error_metrics(&pm, &zeros).unwrap();
        assert_eq!(m.rmse, 1.0);
        assert_eq!(m.mean, 0.0);
    }

    #[test]
    fn metrics_reject_misaligned_grids() {
        let a = SignalSeries::new(0.0, 1.0, vec![0.0; 4]).unwrap();
        let b = SignalSeries::new(0.5, 1.0, vec![0.0; 4]).unwrap();
        assert!(error_metrics(&a, &b).is_err());
        let c = SignalSeries::new(0.0, 0.5, vec![0.0; 4]).unwrap();
        assert!(error_metrics(&a, &c).is_err());
    }
}
