//! Frequencies of empirical eigenvectors, conjugate pairing for real
//! observables, and the mean-ergodic (Yosida) amplitude estimator.
//!
//! Frequencies are radians per step everywhere except at the Yosida
//! boundary, which takes cycles per step. [`cycles_to_radians`] and
//! [`radians_to_cycles`] are the only conversions.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

pub fn cycles_to_radians(cycles: f64) -> f64 {
    TAU * cycles
}

pub fn radians_to_cycles(radians: f64) -> f64 {
    radians / TAU
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    DftPeak,
    LocalMaximaCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Radians per step in `(-π, π]`.
    pub omega: f64,
    /// Main spectral peak over the largest non-adjacent bin of the unpadded
    /// DFT; infinite when nothing else is above round-off.
    pub peak_sharpness: f64,
    pub extraction: Extraction,
    /// Other peaks at least half the height of the main one.
    pub secondary_peaks: Vec<f64>,
    pub multiplicity_warning: bool,
}

/// Zero-padding factor of the DFT peak search.
pub const DFT_PADDING: usize = 8;

pub fn extract_frequency(eigvec: &[Complex64], method: Extraction) -> Result<FrequencyEstimate> {
    let d = eigvec.len();
    if d < 8 {
        return Err(invalid(format!(
            "frequency extraction needs at least 8 entries, got {d}"
        )));
    }
    if eigvec.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::Degenerate("all-zero eigenvector".into()));
    }
    // A real vector has a mirror-symmetric spectrum; only ω in [0, π] is
    // searched so the two halves cannot compete.
    let scale = eigvec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mirror = eigvec.iter().all(|z| z.im.abs() <= 1e-12 * scale);
    let mut planner = FftPlanner::<f64>::new();

    let mut plain = eigvec.to_vec();
    planner.plan_fft_forward(d).process(&mut plain);
    let plain_mag: Vec<f64> = plain.iter().map(|z| z.norm()).collect();
    let sharpness = peak_sharpness(&plain_mag, if mirror { d / 2 + 1 } else { d });

    let size = DFT_PADDING * d;
    let searched = if mirror { size / 2 + 1 } else { size };
    let mut padded = vec![Complex64::new(0.0, 0.0); size];
    padded[..d].copy_from_slice(eigvec);
    planner.plan_fft_forward(size).process(&mut padded);
    let mag: Vec<f64> = padded.iter().map(|z| z.norm()).collect();
    let peak = argmax(&mag[..searched]);

    let secondary_peaks: Vec<f64> = (0..searched)
        .filter(|&j| j != peak)
        .filter(|&j| {
            let left = mag[(j + size - 1) % size];
            let right = mag[(j + 1) % size];
            mag[j] >= left && mag[j] > right && mag[j] >= 0.5 * mag[peak]
        })
        .map(|j| wrap_angle(TAU * j as f64 / size as f64))
        .collect();

    let omega = match method {
        Extraction::DftPeak => {
            let ln = |j: usize| mag[j % size].max(f64::MIN_POSITIVE).ln();
            let (a, b, c) = (ln(peak + size - 1), ln(peak), ln(peak + 1));
            let denom = a - 2.0 * b + c;
            let offset = if denom.abs() > 0.0 {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            wrap_angle(TAU * (peak as f64 + offset) / size as f64)
        }
        // Valid for the real-observable and simple-energy cases only; the
        // count carries no sign, so the result is in [0, π].
        Extraction::LocalMaximaCount => {
            let maxima = (1..d - 1)
                .filter(|&i| eigvec[i].re > eigvec[i - 1].re && eigvec[i].re > eigvec[i + 1].re)
                .count();
            TAU * maxima as f64 / d as f64
        }
    };

    Ok(FrequencyEstimate {
        omega,
        peak_sharpness: sharpness,
        extraction: method,
        multiplicity_warning: !secondary_peaks.is_empty(),
        secondary_peaks,
    })
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

// Only bins below `searched` take part; distances wrap around the full length.
fn peak_sharpness(mag: &[f64], searched: usize) -> f64 {
    let d = mag.len();
    let peak = argmax(&mag[..searched]);
    let second = (0..searched)
        .filter(|&j| {
            let dist = (j + d - peak) % d;
            dist.min(d - dist) >= 2
        })
        .map(|j| mag[j])
        .fold(0.0, f64::max);
    if second <= 1e-12 * mag[peak] {
        f64::INFINITY
    } else {
        mag[peak] / second
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    /// Eigenvalue index `i`.
    pub index: usize,
    /// Renormalized eigenvalue, the estimate of `|a_i|^2`.
    pub energy: f64,
    /// Radians per step.
    pub omega: f64,
    /// Eigenvalue index of the conjugate partner.
    pub pair_index: Option<usize>,
    /// Energy of the mode plus its partner.
    pub combined_energy: Option<f64>,
    /// Real observable, no partner found, and not self-conjugate.
    pub unpaired: bool,
    pub extraction: Extraction,
    pub peak_sharpness: f64,
    pub multiplicity_warning: bool,
}

impl ModeEstimate {
    pub fn new(index: usize, energy: f64, freq: &FrequencyEstimate) -> Self {
        Self {
            index,
            energy,
            omega: freq.omega,
            pair_index: None,
            combined_energy: None,
            unpaired: false,
            extraction: freq.extraction,
            peak_sharpness: freq.peak_sharpness,
            multiplicity_warning: freq.multiplicity_warning,
        }
    }
}

/// Greedy conjugate matching for real observables.
///
/// Modes are expected in descending energy. Two modes pair when their
/// frequencies agree up to sign within `2π / dim` and their energies differ by
/// at most `eps_pair` relative; the later mode of a pair is given the
/// opposite frequency. Complex observables pass through.
pub fn pair_conjugates(
    modes: &[ModeEstimate],
    is_real: bool,
    eps_pair: f64,
    dim: usize,
) -> Vec<ModeEstimate> {
    let mut out = modes.to_vec();
    if !is_real {
        return out;
    }
    let tol = TAU / dim.max(1) as f64;
    for a in 0..out.len() {
        if out[a].pair_index.is_some() {
            continue;
        }
        // Real eigenvectors report ω >= 0, so a partner may carry the same
        // sign instead of the opposite one.
        let partner = (a + 1..out.len()).find(|&b| {
            out[b].pair_index.is_none()
                && (wrap_angle(out[a].omega + out[b].omega).abs() <= tol
                    || wrap_angle(out[a].omega - out[b].omega).abs() <= tol)
                && (out[a].energy - out[b].energy).abs()
                    <= eps_pair * out[a].energy.max(out[b].energy)
        });
        match partner {
            Some(b) => {
                if wrap_angle(out[a].omega + out[b].omega).abs() > tol {
                    out[b].omega = wrap_angle(-out[b].omega);
                }
                let combined = out[a].energy + out[b].energy;
                let (ia, ib) = (out[a].index, out[b].index);
                out[a].pair_index = Some(ib);
                out[b].pair_index = Some(ia);
                out[a].combined_energy = Some(combined);
                out[b].combined_energy = Some(combined);
            }
            None => {
                let w = out[a].omega.abs();
                out[a].unpaired = w > tol && (PI - w) > tol;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub a: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YosidaEstimate {
    /// Cycles per step.
    pub omega: f64,
    pub a_omega: Complex64,
    pub t_used: usize,
    pub partial_curve: Option<Vec<CurvePoint>>,
}

impl YosidaEstimate {
    pub fn energy(&self) -> f64 {
        self.a_omega.norm_sqr()
    }
}

/// Ten logarithmically spaced averaging lengths ending at `t_used`.
pub fn log_checkpoints(t_used: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=10)
        .map(|c| ((t_used as f64).powf(c as f64 / 10.0).round() as usize).clamp(1, t_used))
        .collect();
    out.dedup();
    if out.last() != Some(&t_used) {
        out.push(t_used);
    }
    out
}

fn check_t_used(series: &TimeSeries, t_used: usize) -> Result<()> {
    if t_used == 0 || t_used > series.len() {
        return Err(invalid(format!(
            "averaging length {t_used} must be in 1..={}",
            series.len()
        )));
    }
    Ok(())
}

/// `a_ω = (1/T) Σ_{t<T} exp(-2πiωt) f(t)` with `ω` in cycles per step.
pub fn yosida(series: &TimeSeries, omega: f64, t_used: usize) -> Result<YosidaEstimate> {
    yosida_with_curve(series, omega, t_used, false)
}

pub fn yosida_with_curve(
    series: &TimeSeries,
    omega: f64,
    t_used: usize,
    curve: bool,
) -> Result<YosidaEstimate> {
    check_t_used(series, t_used)?;
    if !omega.is_finite() {
        return Err(invalid("frequency must be finite"));
    }
    let checkpoints = if curve { log_checkpoints(t_used) } else { Vec::new() };
    let mut next_cp = checkpoints.iter().peekable();
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, f) in series.values()[..t_used].iter().enumerate() {
        acc += f * phasor(omega, t);
        if next_cp.peek() == Some(&&(t + 1)) {
            next_cp.next();
            points.push(CurvePoint {
                t: t + 1,
                a: acc / (t + 1) as f64,
            });
        }
    }
    Ok(YosidaEstimate {
        omega,
        a_omega: acc / t_used as f64,
        t_used,
        partial_curve: curve.then_some(points),
    })
}

// exp(-2πiωt), reducing ωt modulo one first so large t keeps full precision.
fn phasor(omega: f64, t: usize) -> Complex64 {
    let turns = (omega * t as f64).rem_euclid(1.0);
    Complex64::from_polar(1.0, -TAU * turns)
}

/// Yosida amplitudes on the uniform grid `omega_min..=omega_max` (cycles per
/// step, inside `(-0.5, 0.5]`).
///
/// Grids that land on Fourier bins of length `t_used` take a single FFT;
/// anything else runs one rotating-phasor accumulation per frequency.
pub fn yosida_scan(
    series: &TimeSeries,
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
    t_used: usize,
) -> Result<Vec<YosidaEstimate>> {
    check_t_used(series, t_used)?;
    if n_points < 2 {
        return Err(invalid("a frequency scan needs at least 2 points"));
    }
    let in_band = |w: f64| w > -0.5 && w <= 0.5;
    if !(in_band(omega_min) && in_band(omega_max) && omega_min < omega_max) {
        return Err(invalid(format!(
            "scan range {omega_min}..{omega_max} must lie in (-0.5, 0.5] and be increasing"
        )));
    }
    let step = (omega_max - omega_min) / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points).map(|p| omega_min + p as f64 * step).collect();

    let t = t_used as f64;
    let on_bins = is_integral(omega_min * t) && is_integral(step * t);
    let amplitudes = if on_bins {
        fft_bins(series, &grid, t_used)
    } else {
        grid.par_iter()
            .map(|&w| rotating_sum(&series.values()[..t_used], w))
            .collect()
    };
    Ok(grid
        .into_iter()
        .zip(amplitudes)
        .map(|(omega, a_omega)| YosidaEstimate {
            omega,
            a_omega,
            t_used,
            partial_curve: None,
        })
        .collect())
}

fn is_integral(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0)
}

fn fft_bins(series: &TimeSeries, grid: &[f64], t_used: usize) -> Vec<Complex64> {
    let mut buf = series.values()[..t_used].to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_forward(t_used)
        .process(&mut buf);
    grid.iter()
        .map(|&w| {
            let k = (w * t_used as f64).round() as i64;
            buf[k.rem_euclid(t_used as i64) as usize] / t_used as f64
        })
        .collect()
}

const RESYNC: usize = 1024;

fn rotating_sum(values: &[Complex64], omega: f64) -> Complex64 {
    let step = phasor(omega, 1);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut z = Complex64::new(1.0, 0.0);
    for (t, f) in values.iter().enumerate() {
        if t % RESYNC == 0 {
            z = phasor(omega, t);
        }
        acc += f * z;
        z *= step;
    }
    acc / values.len() as f64
}
