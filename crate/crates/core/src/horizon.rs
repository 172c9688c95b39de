//! Expanding-horizon estimation over [t0, t]: a batch Gramian estimate and
//! the equivalent recursive information filter.
//!
//! The batch path evaluates the deadbeat formula directly: the observation
//! integral is taken against the piecewise-linear interpolant of the samples
//! (closed form, no sampling error beyond interpolation) and multiplied by
//! the closed-form Gramian inverse. The recursive path propagates the
//! information pair (S, xhat) through
//!
//! ```text
//! dS/dt    = -A' S - S A + C' C
//! dxhat/dt = (A - S^-1 C' C) xhat + S^-1 C' y
//! ```
//!
//! with a classical fourth-order Runge-Kutta step, y interpolated linearly
//! between samples. S(t) equals the expanding-horizon Gramian, so the filter
//! is warm-started from its closed form at a small t > 0 where it is already
//! invertible; at t = 0 the information matrix vanishes and the ODEs cannot
//! be started.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gramian::gramian_entries;
use crate::runtime::StateVec;
use crate::series::SignalSeries;

/// Snapshot of the filter: time, information matrix, estimate, and the
/// log-determinant of S as a conditioning diagnostic.
#[derive(Clone, Debug)]
pub struct InfoFilterState {
    pub t: f64,
    pub s: DMatrix<f64>,
    pub xhat: DVector<f64>,
    pub s_logdet: f64,
}

/// Deadbeat estimate over the expanding window [series start, t]:
/// the state is the Gramian inverse applied to the monomial-weighted
/// observation integrals. `t` is snapped to the sample grid.
pub fn batch_expanding_estimate(s: &SignalSeries, degree: usize, t: f64) -> Result<StateVec> {
    let idx = s.nearest_index(t)?;
    if idx < degree + 2 {
        return Err(Error::Config(format!(
            "window of {idx} steps is too short to invert a degree-{degree} Gramian; \
             need more than {} steps",
            degree + 1
        )));
    }
    let len = idx as f64 * s.dt();
    let t_snap = s.time_at(idx);
    let mut z = DVector::zeros(degree + 1);
    let mut fact = 1.0;
    for k in 0..=degree {
        if k > 0 {
            fact *= k as f64;
        }
        // (u - 1)^k expanded in the window coordinate u = (tau - t0) / L.
        let poly: Vec<f64> = (0..=k)
            .map(|p| binom_f64(k, p) * crate::rational::parity_sign(k - p) as f64)
            .collect();
        let weights = hat_projection_f64(&poly, idx);
        let dot: f64 = weights
            .iter()
            .zip(&s.values()[..=idx])
            .map(|(w, y)| w * y)
            .sum();
        z[k] = len.powi(k as i32 + 1) / fact * dot;
    }
    let winv = crate::gramian::gramian_inverse_closed(degree, s.t0(), t_snap)?.float_matrix();
    let x = winv * z;
    Ok(StateVec {
        t: t_snap,
        x: x.iter().copied().collect(),
    })
}

fn binom_f64(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Float twin of the exact hat-basis projection in `runtime`: integrals of a
/// polynomial against the piecewise-linear basis on the unit-interval grid
/// i / segments. Closed form, recomputed per call, so the expanding horizon
/// can afford one projection per output time.
fn hat_projection_f64(coeffs: &[f64], segments: usize) -> Vec<f64> {
    let m = segments as f64;
    (0..=segments)
        .map(|i| {
            let fi = i as f64;
            let mut acc = 0.0;
            if i > 0 {
                acc += poly_linear_integral(coeffs, [1.0 - fi, m], (fi - 1.0) / m, fi / m);
            }
            if i < segments {
                acc += poly_linear_integral(coeffs, [fi + 1.0, -m], fi / m, (fi + 1.0) / m);
            }
            acc
        })
        .collect()
}

fn poly_linear_integral(p: &[f64], lin: [f64; 2], lo: f64, hi: f64) -> f64 {
    let mut prod = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        prod[k] += c * lin[0];
        prod[k + 1] += c * lin[1];
    }
    let anti = |u: f64| {
        let mut acc = 0.0;
        for k in (0..prod.len()).rev() {
            acc = acc * u + prod[k] / (k + 1) as f64;
        }
        acc * u
    };
    anti(hi) - anti(lo)
}

/// Recursive information filter over an expanding horizon.
#[derive(Clone, Debug)]
pub struct InfoFilter {
    degree: usize,
    t: f64,
    s: DMatrix<f64>,
    xhat: DVector<f64>,
}

impl InfoFilter {
    /// Starts from an explicit information pair. S must be symmetric with
    /// the filter dimension degree + 1.
    pub fn new(degree: usize, t: f64, s: DMatrix<f64>, xhat: DVector<f64>) -> Result<Self> {
        let dim = degree + 1;
        if s.nrows() != dim || s.ncols() != dim || xhat.len() != dim {
            return Err(Error::Config(format!(
                "filter of degree {degree} needs {dim}x{dim} S and a {dim}-vector estimate"
            )));
        }
        Ok(Self { degree, t, s, xhat })
    }

    /// Closed-form warm start at `t_warm` (snapped to the grid): S from the
    /// exact expanding-horizon Gramian and the estimate from the batch
    /// formula. Returns the filter and the start index in the series.
    pub fn from_warm_start(
        series: &SignalSeries,
        degree: usize,
        t_warm: f64,
    ) -> Result<(Self, usize)> {
        let idx = series.nearest_index(t_warm)?;
        if idx < degree + 2 {
            return Err(Error::Config(format!(
                "warm-up time {t_warm} covers only {idx} steps; a degree-{degree} filter \
                 needs at least {}",
                degree + 2
            )));
        }
        let t_snap = series.time_at(idx);
        let s_mat = gramian_entries(degree, series.t0(), t_snap)?.float_matrix();
        let batch = batch_expanding_estimate(series, degree, t_snap)?;
        let filter = Self::new(degree, t_snap, s_mat, DVector::from_vec(batch.x))?;
        Ok((filter, idx))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn s_matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn xhat(&self) -> &DVector<f64> {
        &self.xhat
    }

    pub fn snapshot(&self) -> Result<InfoFilterState> {
        Ok(InfoFilterState {
            t: self.t,
            s: self.s.clone(),
            xhat: self.xhat.clone(),
            s_logdet: self.s_logdet()?,
        })
    }

    pub fn s_logdet(&self) -> Result<f64> {
        let chol = Cholesky::new(self.s.clone()).ok_or_else(|| {
            Error::Numerical("information matrix is not positive definite".into())
        })?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// One RK4 step of length `h`. The measurement is interpolated linearly
    /// from `y_start` at the current time to `y_end` at current time + h.
    pub fn step(&mut self, y_start: f64, y_end: f64, h: f64) -> Result<()> {
        if h <= 0.0 || h.is_nan() {
            return Err(Error::Config(format!(
                "step size must be positive, got {h}"
            )));
        }
        self.check_invertible()?;
        let y_mid = 0.5 * (y_start + y_end);
        let (k1s, k1x) = derivatives(&self.s, &self.xhat, y_start)?;
        let (k2s, k2x) = derivatives(
            &(&self.s + &k1s * (h / 2.0)),
            &(&self.xhat + &k1x * (h / 2.0)),
            y_mid,
        )?;
        let (k3s, k3x) = derivatives(
            &(&self.s + &k2s * (h / 2.0)),
            &(&self.xhat + &k2x * (h / 2.0)),
            y_mid,
        )?;
        let (k4s, k4x) = derivatives(&(&self.s + &k3s * h), &(&self.xhat + &k3x * h), y_end)?;
        self.s += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (h / 6.0);
        self.xhat += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        // Keep S exactly symmetric against drift.
        let sym = (&self.s + self.s.transpose()) * 0.5;
        self.s = sym;
        self.t += h;
        Ok(())
    }

    fn check_invertible(&self) -> Result<()> {
        let dim = (self.degree + 1) as f64;
        let scale = self.s.trace() / dim;
        let min_eig = SymmetricEigen::new(self.s.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let gate = 1e-12 * scale.max(f64::MIN_POSITIVE);
        if min_eig <= gate || min_eig.is_nan() {
            return Err(Error::Numerical(format!(
                "information matrix is singular (min eigenvalue {min_eig:.3e}); \
                 warm-start the filter from the closed-form Gramian at t > 0"
            )));
        }
        Ok(())
    }
}

/// Right-hand side of the information-filter ODE pair for the integrator
/// chain (A shifts up, C picks the first component).
fn derivatives(
    s: &DMatrix<f64>,
    xhat: &DVector<f64>,
    y: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = s.nrows();
    let mut ds = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            if i >= 1 {
                v -= s[(i - 1, j)];
            }
            if j >= 1 {
                v -= s[(i, j - 1)];
            }
            ds[(i, j)] = v;
        }
    }
    ds[(0, 0)] += 1.0;
    let chol = Cholesky::new(s.clone()).ok_or_else(|| {
        Error::Numerical(
            "information matrix lost positive definiteness inside a step; \
             warm-start the filter from the closed-form Gramian"
                .into(),
        )
    })?;
    let mut e0 = DVector::zeros(n);
    e0[0] = 1.0;
    let gain = chol.solve(&e0);
    let mut dx = DVector::zeros(n);
    for i in 0..n - 1 {
        dx[i] = xhat[i + 1];
    }
    let innovation = y - xhat[0];
    dx += gain * innovation;
    Ok((ds, dx))
}

/// Warm-starts at `t_warm` and integrates at the sample rate to the end of
/// the series, returning the full trajectory (warm-start state included).
pub fn run_info_filter(
    s: &SignalSeries,
    degree: usize,
    t_warm: f64,
) -> Result<Vec<InfoFilterState>> {
    let (mut filter, start) = InfoFilter::from_warm_start(s, degree, t_warm)?;
    let mut out = Vec::with_capacity(s.len() - start);
    out.push(filter.snapshot()?);
    for i in start..s.len() - 1 {
        filter.step(s.values()[i], s.values()[i + 1], s.dt())?;
        out.push(filter.snapshot()?);
    }
    Ok(out)
}

/// Writes `t,x0..xN,s_logdet` rows.
pub fn write_trajectory_csv(states: &[InfoFilterState], writer: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let degree = states.first().map_or(0, |st| st.xhat.len() - 1);
    let mut header = vec!["t".to_string()];
    header.extend((0..=degree).map(|k| format!("x{k}")));
    header.push("s_logdet".to_string());
    csv.write_record(&header)
        .map_err(|e| Error::Parse(e.to_string()))?;
    for st in states {
        let mut row = vec![format!("{}", st.t)];
        row.extend(st.xhat.iter().map(|v| format!("{v}")));
        row.push(format!("{}", st.s_logdet));
        csv.write_record(&row)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}
