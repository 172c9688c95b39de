//! Receding-horizon parameter identification for y(t) = w(t)' phi with a
//! constant parameter vector phi.
//!
//! The estimate solves the regressor Gramian system
//!
//! ```text
//! phi_hat(t) = (int_{t-T}^{t} w w' dtau)^-1  int_{t-T}^{t} w y dtau
//! ```
//!
//! with both integrals taken by the trapezoid rule on the sampled products.
//! Using the same quadrature on both sides makes the estimate exact (up to
//! rounding) whenever y lies in the span of the regressors at the sample
//! points. Persistent excitation is scored by the smallest eigenvalue of the
//! Gramian normalized by its mean eigenvalue.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative excitation threshold below which [`identify`] refuses to
/// solve.
pub const DEFAULT_PE_THRESHOLD: f64 = 1e-10;

/// Uniformly sampled regressor vectors w(t) alongside the output y(t).
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorSeries {
    t0: f64,
    dt: f64,
    omega: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl RegressorSeries {
    pub fn new(t0: f64, dt: f64, omega: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::Config(format!(
                "sample step must be positive and finite, got {dt}"
            )));
        }
        if omega.len() != y.len() {
            return Err(Error::Config(format!(
                "{} regressor samples but {} outputs",
                omega.len(),
                y.len()
            )));
        }
        if omega.is_empty() {
            return Err(Error::Config("regressor series is empty".into()));
        }
        let p = omega[0].len();
        if p == 0 || omega.iter().any(|w| w.len() != p) {
            return Err(Error::Config(
                "regressor dimension must be fixed and at least one".into(),
            ));
        }
        Ok(Self { t0, dt, omega, y })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.omega[0].len()
    }

    pub fn omega(&self) -> &[Vec<f64>] {
        &self.omega
    }

    pub fn outputs(&self) -> &[f64] {
        &self.y
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    fn nearest_index(&self, t: f64) -> Result<usize> {
        let pos = (t - self.t0) / self.dt;
        let idx = pos.round();
        if idx < -0.5 || idx > (self.len() - 1) as f64 + 0.5 || !idx.is_finite() {
            return Err(Error::Config(format!(
                "time {t} outside the sampled span [{}, {}]",
                self.t0,
                self.time_at(self.len() - 1)
            )));
        }
        Ok(idx.clamp(0.0, (self.len() - 1) as f64) as usize)
    }

    /// Reads `t,w1..wp,y` rows; the grid must be uniform.
    pub fn read_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let p = {
            let headers = csv.headers().map_err(|e| Error::Parse(e.to_string()))?;
            let names: Vec<&str> = headers.iter().collect();
            if names.len() < 3 || names[0] != "t" || names[names.len() - 1] != "y" {
                return Err(Error::Parse(format!(
                    "expected header `t,w1..wp,y`, got `{}`",
                    names.join(",")
                )));
            }
            names.len() - 2
        };
        let mut times = Vec::new();
        let mut omega = Vec::new();
        let mut y = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != p + 2 {
                return Err(Error::Parse(format!(
                    "row {}: expected {} columns, got {}",
                    times.len() + 2,
                    p + 2,
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
            };
            times.push(parse(&record[0])?);
            omega.push(
                (1..=p)
                    .map(|k| parse(&record[k]))
                    .collect::<Result<Vec<f64>>>()?,
            );
            y.push(parse(&record[p + 1])?);
        }
        if times.len() < 2 {
            return Err(Error::Parse(
                "need at least two rows to establish the sample step".into(),
            ));
        }
        let t0 = times[0];
        let dt = times[1] - times[0];
        if dt <= 0.0 || dt.is_nan() {
            return Err(Error::Parse(
                "time column must be strictly increasing".into(),
            ));
        }
        for (k, &t) in times.iter().enumerate() {
            let expect = t0 + k as f64 * dt;
            if (t - expect).abs() > 1e-9 * dt {
                return Err(Error::Parse(format!(
                    "non-uniform grid at row {}: t = {t}, expected {expect}",
                    k + 2
                )));
            }
        }
        Self::new(t0, dt, omega, y)
    }

    pub fn read_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes `t,w1..wp,y` rows.
    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("w{k}")));
        header.push("y".to_string());
        csv.write_record(&header)
            .map_err(|e| Error::Parse(e.to_string()))?;
        for k in 0..self.len() {
            let mut row = vec![format!("{}", self.time_at(k))];
            row.extend(self.omega[k].iter().map(|v| format!("{v}")));
            row.push(format!("{}", self.y[k]));
            csv.write_record(&row)
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Trapezoid-rule Gramian of the regressors over [t_lo, t_hi] (endpoints
/// snapped to the grid). Symmetric positive semidefinite by construction.
pub fn regressor_gramian(r: &RegressorSeries, t_lo: f64, t_hi: f64) -> Result<DMatrix<f64>> {
    let (lo, hi) = window_indices(r, t_lo, t_hi)?;
    let p = r.dim();
    let mut g = DMatrix::zeros(p, p);
    for k in lo..hi {
        let (wa, wb) = (&r.omega[k], &r.omega[k + 1]);
        for i in 0..p {
            for j in i..p {
                let v = 0.5 * r.dt * (wa[i] * wa[j] + wb[i] * wb[j]);
                g[(i, j)] += v;
                if i != j {
                    g[(j, i)] += v;
                }
            }
        }
    }
    Ok(g)
}

fn window_indices(r: &RegressorSeries, t_lo: f64, t_hi: f64) -> Result<(usize, usize)> {
    if t_hi <= t_lo || t_hi.is_nan() || t_lo.is_nan() {
        return Err(Error::Config(format!("window [{t_lo}, {t_hi}] is empty")));
    }
    let lo = r.nearest_index(t_lo)?;
    let hi = r.nearest_index(t_hi)?;
    if hi <= lo {
        return Err(Error::Config(format!(
            "window [{t_lo}, {t_hi}] snaps to fewer than two samples"
        )));
    }
    Ok((lo, hi))
}

/// Excitation score of a symmetric PSD matrix: smallest eigenvalue divided
/// by the mean eigenvalue (trace / p), clamped to [0, 1]. Zero flags a lost
/// excitation direction.
pub fn pe_metric(g: &DMatrix<f64>) -> f64 {
    let p = g.nrows() as f64;
    let scale = g.trace() / p;
    if scale <= 0.0 || scale.is_nan() {
        return 0.0;
    }
    let min_eig = SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    (min_eig / scale).clamp(0.0, 1.0)
}

/// Identification result: the parameter estimate, the excitation score of
/// the window Gramian and the snapped window actually used.
#[derive(Clone, Debug)]
pub struct Identification {
    pub phi: Vec<f64>,
    pub pe: f64,
    pub window: (f64, f64),
}

/// Receding-horizon estimate over [t - window, t] using the default
/// excitation threshold.
pub fn identify(r: &RegressorSeries, window: f64, t: f64) -> Result<Identification> {
    identify_with_threshold(r, window, t, DEFAULT_PE_THRESHOLD)
}

/// Same as [`identify`] with an explicit relative excitation threshold. The
/// solve goes through a Cholesky factorization of the Gramian rather than an
/// explicit inverse.
pub fn identify_with_threshold(
    r: &RegressorSeries,
    window: f64,
    t: f64,
    pe_threshold: f64,
) -> Result<Identification> {
    if window <= 0.0 || window.is_nan() {
        return Err(Error::Config(format!(
            "window length must be positive, got {window}"
        )));
    }
    let (lo, hi) = window_indices(r, t - window, t)?;
    let g = regressor_gramian(r, r.time_at(lo), r.time_at(hi))?;
    let pe = pe_metric(&g);
    if pe < pe_threshold {
        let eig = SymmetricEigen::new(g.clone());
        let (worst, _) =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |acc, (k, &v)| {
                    if v < acc.1 {
                        (k, v)
                    } else {
                        acc
                    }
                });
        let direction: Vec<f64> = eig.eigenvectors.column(worst).iter().cloned().collect();
        return Err(Error::Excitation(format!(
            "excitation score {pe:.3e} below threshold {pe_threshold:.3e}; \
             deficient direction approx {direction:?}"
        )));
    }
    let mut b = DVector::zeros(r.dim());
    for k in lo..hi {
        let (wa, wb) = (&r.omega[k], &r.omega[k + 1]);
        for i in 0..r.dim() {
            b[i] += 0.5 * r.dt * (wa[i] * r.y[k] + wb[i] * r.y[k + 1]);
        }
    }
    let chol = Cholesky::new(g)
        .ok_or_else(|| Error::Numerical("regressor Gramian is not positive definite".into()))?;
    let phi = chol.solve(&b);
    Ok(Identification {
        phi: phi.iter().copied().collect(),
        pe,
        window: (r.time_at(lo), r.time_at(hi)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::gramian_entries;

    fn phase_regressors(n: usize, dt: f64) -> RegressorSeries {
        // w(t) = (1, t) with y = a0 + a1 t.
        let (a0, a1) = (0.4, -2.5);
        let omega = (0..n).map(|k| vec![1.0, k as f64 * dt]).collect();
        let y = (0..n).map(|k| a0 + a1 * k as f64 * dt).collect();
        RegressorSeries::new(0.0, dt, omega, y).unwrap()
    }

    #[test]
    fn gramian_matches_integrator_chain_up_to_sign() {
        // int_0^T (1, tau)(1, tau)' dtau equals the chain Gramian with the
        // off-diagonal sign flipped by diag(1,-1) W diag(1,-1).
        let r = phase_regressors(1001, 1e-3);
        let g = regressor_gramian(&r, 0.0, 1.0).unwrap();
        let w = gramian_entries(1, 0.0, 1.0).unwrap().float_matrix();
        let signs = [1.0, -1.0];
        for i in 0..2 {
            for j in 0..2 {
                let want = signs[i] * w[(i, j)] * signs[j];
                assert!(
                    (g[(i, j)] - want).abs() <= 1e-6,
                    "entry ({i},{j}): {} vs {want}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn constant_unit_regressor_scales_with_window() {
        let n = 501;
        let omega = vec![vec![1.0, 0.0]; n];
        let y = vec![0.0; n];
        let r = RegressorSeries::new(0.0, 1e-2, omega, y).unwrap();
        let g = regressor_gramian(&r, 0.0, 5.0).unwrap();
        assert!((g[(0, 0)] - 5.0).abs() < 1e-12);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(1, 1)], 0.0);
    }

    #[test]
    fn quadrature_orthogonality_over_full_period() {
        // Step chosen so the grid lands exactly on the period; the trapezoid
        // rule is spectrally accurate over whole periods.
        let dt = std::f64::consts::TAU / 6000.0;
        let n = 6001;
        let omega: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                vec![t.sin(), t.cos()]
            })
            .collect();
        let y = vec![0.0; n];
        let r = RegressorSeries::new(0.0, dt, omega, y).unwrap();
        let g = regressor_gramian(&r, 0.0, std::f64::consts::TAU).unwrap();
        let pi = std::f64::consts::PI;
        assert!((g[(0, 0)] - pi).abs() <= 1e-6);
        assert!((g[(1, 1)] - pi).abs() <= 1e-6);
        assert!(g[(0, 1)].abs() <= 1e-6);
    }

    #[test]
    fn recovers_sinusoid_amplitudes() {
        let dt = 1e-3;
        let n = (std::f64::consts::TAU / dt).round() as usize + 1;
        let omega: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                vec![t.sin(), t.cos()]
            })
            .collect();
        let y: Vec<f64> = omega.iter().map(|w| 2.0 * w[0] + 3.0 * w[1]).collect();
        let r = RegressorSeries::new(0.0, dt, omega, y).unwrap();
        let id = identify(&r, std::f64::consts::TAU, std::f64::consts::TAU).unwrap();
        assert!((id.phi[0] - 2.0).abs() <= 1e-6, "phi0 = {}", id.phi[0]);
        assert!((id.phi[1] - 3.0).abs() <= 1e-6, "phi1 = {}", id.phi[1]);
        assert!(id.pe > 0.9);
    }

    #[test]
    fn recovers_polynomial_parameters() {
        let r = phase_regressors(1001, 1e-3);
        let id = identify(&r, 1.0, 1.0).unwrap();
        assert!((id.phi[0] - 0.4).abs() <= 1e-8);
        assert!((id.phi[1] + 2.5).abs() <= 1e-8);
    }

    #[test]
    fn collinear_regressors_raise_excitation_error() {
        let n = 101;
        let omega = vec![vec![1.0, 1.0]; n];
        let y = vec![2.0; n];
        let r = RegressorSeries::new(0.0, 0.01, omega, y).unwrap();
        match identify(&r, 1.0, 1.0) {
            Err(Error::Excitation(msg)) => assert!(msg.contains("deficient direction")),
            other => panic!("expected excitation error, got {other:?}"),
        }
    }

    #[test]
    fn pe_metric_golden_values() {
        let id2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(pe_metric(&id2), 1.0);
        let flat = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(pe_metric(&flat) <= 1e-15);
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!((pe_metric(&diag) - 2.0 / 3.0).abs() <= 1e-12);
        assert_eq!(pe_metric(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn matches_state_reconstruction_on_phase_regressors() {
        // w(tau) = (1, (tau - t1), (tau - t1)^2/2) reproduces the deadbeat
        // state reconstruction of the same window. The reconstruction carries
        // an interpolation residue of y'' dt^2 / 12 on its smoother component,
        // so the grid is fine enough to bring that under the tolerance.
        let dt = 2.5e-4;
        let n = 4801;
        let t1 = 1.2;
        let series = crate::signal::polynomial_series(&[1.0, 1.0, 1.0], 0.0, dt, n).unwrap();
        let omega: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let d = k as f64 * dt - t1;
                vec![1.0, d, 0.5 * d * d]
            })
            .collect();
        let r = RegressorSeries::new(0.0, dt, omega, series.values().to_vec()).unwrap();
        let id = identify(&r, 0.5, t1).unwrap();
        let sv = crate::runtime::reconstruct_state(&series, 2, 0.5, t1).unwrap();
        for (a, b) in id.phi.iter().zip(&sv.x) {
            assert!(
                (a - b).abs() <= 1e-8,
                "identifier {a} vs reconstruction {b}"
            );
        }
    }

    #[test]
    fn scaling_the_output_scales_the_estimate() {
        let r = phase_regressors(1001, 1e-3);
        let alpha = 3.0;
        let scaled = RegressorSeries::new(
            r.t0(),
            r.dt(),
            r.omega().to_vec(),
            r.outputs().iter().map(|v| alpha * v).collect(),
        )
        .unwrap();
        let base = identify(&r, 1.0, 1.0).unwrap();
        let big = identify(&scaled, 1.0, 1.0).unwrap();
        for (b, s) in base.phi.iter().zip(&big.phi) {
            assert!((alpha * b - s).abs() <= 1e-12 * s.abs().max(1.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = phase_regressors(5, 0.5);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,w1,w2,y\n"));
        let back = RegressorSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, r);
        assert!(RegressorSeries::read_csv("t,y\n0,1\n1,2\n".as_bytes()).is_err());
    }
}
