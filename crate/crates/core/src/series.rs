//! Uniformly sampled time series and their CSV form.
//!
//! The on-disk format is a two-column CSV with header `t,y`, comma separator
//! and `.` decimal point. Reading validates grid uniformity to within
//! 1e-9 * dt.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform samples: value k was taken at `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SignalSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::Config(format!(
                "sample step must be positive and finite, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Config("series must hold at least one sample".into()));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time_at(self.len() - 1)
    }

    /// Index of the grid point nearest to `t`; errors when `t` falls outside
    /// the sampled span by more than half a step.
    pub fn nearest_index(&self, t: f64) -> Result<usize> {
        let pos = (t - self.t0) / self.dt;
        let idx = pos.round();
        if idx < -0.5 || idx > (self.len() - 1) as f64 + 0.5 || !idx.is_finite() {
            return Err(Error::Config(format!(
                "time {t} outside the sampled span [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        Ok(idx.clamp(0.0, (self.len() - 1) as f64) as usize)
    }

    /// Pointwise combination with another series on the same grid.
    pub fn map_with(
        &self,
        other: &SignalSeries,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SignalSeries> {
        let (a, b) = aligned_overlap(self, other)?;
        let values = self.values[a.clone()]
            .iter()
            .zip(&other.values[b])
            .map(|(&x, &y)| f(x, y))
            .collect();
        SignalSeries::new(self.time_at(a.start), self.dt, values)
    }

    pub fn read_csv(reader: impl Read) -> Result<SignalSeries> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        {
            let headers = csv.headers().map_err(csv_err)?;
            if headers.len() < 2 || headers.get(0) != Some("t") {
                return Err(Error::Parse(format!(
                    "expected header `t,y`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for record in csv.records() {
            let record = record.map_err(csv_err)?;
            times.push(parse_field(record.get(0), times.len(), "t")?);
            values.push(parse_field(record.get(1), values.len(), "y")?);
        }
        if times.len() < 2 {
            return Err(Error::Parse(
                "need at least two rows to establish the sample step".into(),
            ));
        }
        let t0 = times[0];
        let dt = times[1] - times[0];
        if dt <= 0.0 || dt.is_nan() {
            return Err(Error::Parse(format!(
                "time column must be strictly increasing, first step is {dt}"
            )));
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
        SignalSeries::new(t0, dt, values)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<SignalSeries> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes `t,<value_name>` rows.
    pub fn write_csv(&self, writer: impl Write, value_name: &str) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["t", value_name]).map_err(csv_err)?;
        for (k, v) in self.values.iter().enumerate() {
            csv.write_record([format!("{}", self.time_at(k)), format!("{v}")])
                .map_err(csv_err)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Index ranges over which two series share grid points; errors unless the
/// steps match and the offset between the grids is a whole number of steps
/// (both to within 1e-9 * dt).
pub fn aligned_overlap(
    a: &SignalSeries,
    b: &SignalSeries,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    let dt = a.dt;
    if (b.dt - dt).abs() > 1e-9 * dt {
        return Err(Error::Config(format!(
            "sample steps differ: {} vs {}",
            a.dt, b.dt
        )));
    }
    let offset = (b.t0 - a.t0) / dt;
    let shift = offset.round();
    if (offset - shift).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "grids are offset by {offset} steps, not an integer"
        )));
    }
    let shift = shift as i64;
    let (a_start, b_start) = if shift >= 0 {
        (shift as usize, 0usize)
    } else {
        (0usize, (-shift) as usize)
    };
    if a_start >= a.len() || b_start >= b.len() {
        return Err(Error::Config("series do not overlap".into()));
    }
    let n = (a.len() - a_start).min(b.len() - b_start);
    Ok((a_start..a_start + n, b_start..b_start + n))
}

fn parse_field(field: Option<&str>, row: usize, name: &str) -> Result<f64> {
    let raw =
        field.ok_or_else(|| Error::Parse(format!("row {}: missing column `{name}`", row + 2)))?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {}: `{raw}` is not a number", row + 2)))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
