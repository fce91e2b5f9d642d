//! Scalar time series, preprocessing, empirical inner products and lag-product
//! (autocovariance) estimation.
//!
//! Everything is stored as complex numbers. Real data carries an `is_real` flag
//! that downstream code uses to zero imaginary round-off and to enable conjugate
//! pairing of modes.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative jitter in the sample times accepted by the CSV reader.
pub const CSV_SPACING_TOLERANCE: f64 = 1e-9;

/// A uniformly sampled scalar observable.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Arc<[Complex64]>,
    dt: f64,
    label: String,
    is_real: bool,
}

impl TimeSeries {
    pub fn new(values: Vec<Complex64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("time series must contain at least one sample"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("sample step must be positive, got {dt}")));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(invalid(format!("non-finite sample at index {k}")));
        }
        let is_real = values.iter().all(|v| v.im == 0.0);
        Ok(Self {
            values: values.into(),
            dt,
            label: label.into(),
            is_real,
        })
    }

    pub fn from_real(values: &[f64], dt: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            dt,
            label,
        )
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Real parts, for series flagged real.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// First `len` samples as a new series.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(invalid(format!(
                "cannot truncate a series of {} samples to {len}",
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[..len].into(),
            dt: self.dt,
            label: self.label.clone(),
            is_real: self.is_real,
        })
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.conj()).collect(),
            dt: self.dt,
            label: self.label.clone(),
            is_real: self.is_real,
        }
    }

    /// Mean of |f|^2 over the whole series.
    pub fn mean_energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.len() as f64
    }

    // Keeps the real flag sticky: operations on real data never produce
    // imaginary round-off.
    fn derived(&self, mut values: Vec<Complex64>) -> Self {
        if self.is_real {
            values.iter_mut().for_each(|v| v.im = 0.0);
        }
        Self {
            values: values.into(),
            dt: self.dt,
            label: self.label.clone(),
            is_real: self.is_real,
        }
    }

    /// Reads the `t,value` / `t,re,im` CSV format.
    pub fn read_csv<R: BufRead>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let header = header?;
        let columns: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        let complex = match columns.as_slice() {
            ["t", "value"] => false,
            ["t", "re", "im"] => true,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `t,value` or `t,re,im`, found `{header}`"),
                })
            }
        };
        let width = if complex { 3 } else { 2 };

        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != width {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {width} fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("cannot parse `{s}` as a number"),
                })
            };
            times.push((lineno, parse(fields[0])?));
            let re = parse(fields[1])?;
            let im = if complex { parse(fields[2])? } else { 0.0 };
            values.push(Complex64::new(re, im));
        }
        if values.is_empty() {
            return Err(Error::Parse {
                line: 2,
                message: "no samples".into(),
            });
        }

        let dt = if times.len() > 1 {
            let (_, t0) = times[0];
            let (_, t_last) = times[times.len() - 1];
            (t_last - t0) / (times.len() - 1) as f64
        } else {
            1.0
        };
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::Parse {
                line: 2,
                message: "sample times must be strictly increasing".into(),
            });
        }
        for pair in times.windows(2) {
            let ((_, a), (line, b)) = (pair[0], pair[1]);
            let slack = CSV_SPACING_TOLERANCE * dt + 4.0 * f64::EPSILON * b.abs().max(a.abs());
            if ((b - a) - dt).abs() > slack {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "non-uniform spacing: step {} differs from mean step {dt}",
                        b - a
                    ),
                });
            }
        }
        Self::new(values, dt, label).map_err(|e| Error::Parse {
            line: 2,
            message: e.to_string(),
        })
    }

    /// Writes the CSV format; real series use the two-column layout.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if self.is_real {
            writeln!(w, "t,value")?;
            for (k, v) in self.values.iter().enumerate() {
                writeln!(w, "{},{}", k as f64 * self.dt, v.re)?;
            }
        } else {
            writeln!(w, "t,re,im")?;
            for (k, v) in self.values.iter().enumerate() {
                writeln!(w, "{},{},{}", k as f64 * self.dt, v.re, v.im)?;
            }
        }
        w.flush()
    }
}

/// Lag products ρ_0..ρ_L of a series averaged over `sample_count` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovSequence {
    pub rho: Vec<Complex64>,
    pub sample_count: usize,
    pub max_lag: usize,
}

impl AutocovSequence {
    pub fn lag(&self, l: usize) -> Complex64 {
        self.rho[l]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutocovMethod {
    Direct,
    Fft,
}

/// Removes the least-squares affine trend in the sample index. Real and
/// imaginary parts are fitted independently.
pub fn detrend_linear(series: &TimeSeries) -> Result<TimeSeries> {
    let n = series.len();
    if n < 2 {
        return Err(invalid("detrending needs at least two samples"));
    }
    let center = (n - 1) as f64 / 2.0;
    let mean = series.mean();
    let mut sxx = 0.0;
    let mut sxy = Complex64::new(0.0, 0.0);
    for (k, v) in series.values().iter().enumerate() {
        let dx = k as f64 - center;
        sxx += dx * dx;
        sxy += (v - mean) * dx;
    }
    let slope = sxy / sxx;
    let out = series
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v - mean - slope * (k as f64 - center))
        .collect();
    Ok(series.derived(out))
}

/// Rescales to zero mean and unit (population) variance.
pub fn normalize_unit_variance(series: &TimeSeries) -> Result<TimeSeries> {
    let mean = series.mean();
    let n = series.len() as f64;
    let var = series.values().iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n;
    let scale = series
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 || var <= 1e-24 * scale * scale {
        return Err(Error::Degenerate(format!(
            "series `{}` has zero variance",
            series.label()
        )));
    }
    let inv = 1.0 / var.sqrt();
    let out = series.values().iter().map(|v| (v - mean) * inv).collect();
    Ok(series.derived(out))
}

/// (1/n) Σ_{k<n} h_k conj(g_k).
pub fn inner_product(h: &TimeSeries, g: &TimeSeries, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(invalid("inner product needs n >= 1"));
    }
    if h.len() < n || g.len() < n {
        return Err(invalid(format!(
            "inner product over {n} terms needs {n} samples, have {} and {}",
            h.len(),
            g.len()
        )));
    }
    let sum: Complex64 = h.values()[..n]
        .iter()
        .zip(&g.values()[..n])
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(sum / n as f64)
}

/// ρ_l = (1/n) Σ_{k<n} f(k) conj(f(k+l)) for l = 0..=max_lag.
///
/// Uses the FFT path once the direct sum would cost more than a few million
/// operations.
pub fn autocovariance(series: &TimeSeries, max_lag: usize, n: usize) -> Result<AutocovSequence> {
    let method = if (max_lag + 1).saturating_mul(n) > 4_000_000 {
        AutocovMethod::Fft
    } else {
        AutocovMethod::Direct
    };
    autocovariance_with(series, max_lag, n, method)
}

pub fn autocovariance_with(
    series: &TimeSeries,
    max_lag: usize,
    n: usize,
    method: AutocovMethod,
) -> Result<AutocovSequence> {
    if n == 0 {
        return Err(invalid("autocovariance needs n >= 1"));
    }
    let needed = n + max_lag;
    if series.len() < needed {
        return Err(invalid(format!(
            "autocovariance with n = {n} and max lag {max_lag} needs {needed} samples, have {}",
            series.len()
        )));
    }
    let f = series.values();
    let mut rho = match method {
        AutocovMethod::Direct => (0..=max_lag)
            .map(|l| {
                f[..n]
                    .iter()
                    .zip(&f[l..l + n])
                    .map(|(a, b)| a * b.conj())
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect::<Vec<_>>(),
        AutocovMethod::Fft => fft_lags(&f[..needed], n, max_lag),
    };
    rho[0].im = 0.0;
    if series.is_real() {
        rho.iter_mut().for_each(|r| r.im = 0.0);
    }
    Ok(AutocovSequence {
        rho,
        sample_count: n,
        max_lag,
    })
}

// Circular cross-correlation of the n-sample head against the (n + max_lag)
// window; padding to >= n + max_lag keeps wrapped terms zero.
fn fft_lags(window: &[Complex64], n: usize, max_lag: usize) -> Vec<Complex64> {
    let size = window.len().next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let zero = Complex64::new(0.0, 0.0);
    let mut head = vec![zero; size];
    head[..n].copy_from_slice(&window[..n]);
    let mut full = vec![zero; size];
    full[..window.len()].copy_from_slice(window);
    forward.process(&mut head);
    forward.process(&mut full);

    // c[l] = Σ_k conj(x_k) y_{k+l}; ρ_l = conj(c[l]) / n.
    let mut prod: Vec<Complex64> = head.iter().zip(&full).map(|(x, y)| x.conj() * y).collect();
    inverse.process(&mut prod);
    let scale = 1.0 / (size as f64 * n as f64);
    prod[..=max_lag].iter().map(|c| c.conj() * scale).collect()
}

/// Relative change of the lag-0 estimate between averaging over `n` and
/// `n / 2` samples. Large values indicate the series is not yet stationary at
/// this length.
pub fn lag0_drift(series: &TimeSeries, n: usize) -> Result<f64> {
    if n < 2 || n > series.len() {
        return Err(invalid(format!(
            "lag-0 drift needs 2 <= n <= {}, got {n}",
            series.len()
        )));
    }
    let full = autocovariance_with(series, 0, n, AutocovMethod::Direct)?.rho[0].re;
    let half = autocovariance_with(series, 0, n / 2, AutocovMethod::Direct)?.rho[0].re;
    if full == 0.0 {
        return Ok(0.0);
    }
    Ok((full - half).abs() / full)
}
