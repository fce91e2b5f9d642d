//! Reference systems: Lorenz-63 under classic RK4, Lorenz-63 coupled to an
//! exact circle rotation, seeded synthetic tones, and a synthetic gridded
//! field with a known annual-style tone per cell.
//!
//! Pseudo-random draws come from ChaCha20 (`rand_chacha`) seeded with the
//! user seed; Gaussians use the Box-Muller transform on consecutive uniform
//! pairs so the sequence depends only on the seed.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GriddedDataset;
use crate::series::TimeSeries;

/// States farther than this from the origin are treated as a blow-up.
pub const DIVERGENCE_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub params: Lorenz63Params,
}

impl Default for Lorenz63State {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }
}

impl Lorenz63State {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            params: Lorenz63Params::default(),
        }
    }

    fn derivative(&self, [x, y, z]: [f64; 3]) -> [f64; 3] {
        let p = &self.params;
        [p.sigma * (y - x), x * (p.rho - z) - y, x * y - p.beta * z]
    }

    /// One classic fourth-order Runge-Kutta step.
    pub fn rk4_step(&self, dt: f64) -> Self {
        let s = [self.x, self.y, self.z];
        let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
        let k1 = self.derivative(s);
        let k2 = self.derivative(add(s, k1, dt / 2.0));
        let k3 = self.derivative(add(s, k2, dt / 2.0));
        let k4 = self.derivative(add(s, k3, dt));
        let next = |i: usize| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        Self {
            x: next(0),
            y: next(1),
            z: next(2),
            params: self.params,
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn is_sane(&self) -> bool {
        let r2 = self.x * self.x + self.y * self.y + self.z * self.z;
        r2.is_finite() && r2 <= DIVERGENCE_RADIUS * DIVERGENCE_RADIUS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    /// Steps integrated and discarded before recording starts.
    pub burn_in: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            burn_in: 10_000,
        }
    }
}

impl IntegrationConfig {
    fn validate(&self, steps: usize) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        Ok(())
    }
}

/// Recorded Lorenz-63 states after the burn-in; `steps` states, the first
/// being the state right after burn-in.
pub fn lorenz63_trajectory(
    initial: Lorenz63State,
    steps: usize,
    cfg: &IntegrationConfig,
) -> Result<Vec<Lorenz63State>> {
    cfg.validate(steps)?;
    let mut state = initial;
    for step in 0..cfg.burn_in {
        state = state.rk4_step(cfg.dt);
        if !state.is_sane() {
            return Err(Error::Divergence { step });
        }
    }
    let mut out = Vec::with_capacity(steps);
    out.push(state);
    for step in 1..steps {
        state = state.rk4_step(cfg.dt);
        if !state.is_sane() {
            return Err(Error::Divergence {
                step: cfg.burn_in + step,
            });
        }
        out.push(state);
    }
    Ok(out)
}

/// `x(t) - mean(x)` along a Lorenz-63 trajectory.
pub fn integrate_lorenz63(
    initial: Lorenz63State,
    steps: usize,
    cfg: &IntegrationConfig,
) -> Result<TimeSeries> {
    let traj = lorenz63_trajectory(initial, steps, cfg)?;
    let mean = traj.iter().map(|s| s.x).sum::<f64>() / steps as f64;
    let x: Vec<f64> = traj.iter().map(|s| s.x - mean).collect();
    TimeSeries::from_real(&x, cfg.dt, "lorenz63_x")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorState {
    pub lorenz: Lorenz63State,
    /// Angle in `[0, 2π)`.
    pub xi: f64,
}

impl Default for RotorState {
    fn default() -> Self {
        Self {
            lorenz: Lorenz63State::default(),
            xi: 0.0,
        }
    }
}

/// Rotation angle after `t` recorded steps. Computed from the step count
/// rather than accumulated, so it is exact up to one rounding.
pub fn rotor_angle(xi0: f64, t: usize, dt: f64, period: f64) -> f64 {
    let turns = (t as f64 * dt / period).rem_euclid(1.0);
    (xi0 + TAU * turns).rem_euclid(TAU)
}

/// Lorenz-63 coupled to a rotation of the given period; records
/// `sin(ξ(t) + x(t)/10)`.
pub fn integrate_rotor(
    initial: RotorState,
    steps: usize,
    cfg: &IntegrationConfig,
    period: f64,
) -> Result<TimeSeries> {
    if !(period.is_finite() && period > 0.0) {
        return Err(invalid(format!("period must be positive, got {period}")));
    }
    let traj = lorenz63_trajectory(initial.lorenz, steps, cfg)?;
    let xi0 = initial.xi.rem_euclid(TAU);
    let f: Vec<f64> = traj
        .iter()
        .enumerate()
        .map(|(t, s)| (rotor_angle(xi0, t, cfg.dt, period) + s.x / 10.0).sin())
        .collect();
    TimeSeries::from_real(&f, cfg.dt, "rotor")
}

/// ChaCha20 uniform pairs through Box-Muller.
pub struct GaussianSource {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // (0, 1] keeps the log finite.
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTones {
    pub series: TimeSeries,
    /// Ground-truth `|a_p|^2`, aligned with `omegas`.
    pub energies: Vec<f64>,
    pub omegas: Vec<f64>,
}

/// `f(t) = Σ_p a_p e^{iω_p t} + ε_t` with `ε_t` circular complex Gaussian of
/// variance `noise_std^2`.
pub fn synth_tones(
    amps: &[Complex64],
    omegas: &[f64],
    noise_std: f64,
    seed: u64,
    steps: usize,
) -> Result<SyntheticTones> {
    if amps.len() != omegas.len() {
        return Err(invalid(format!(
            "{} amplitudes for {} frequencies",
            amps.len(),
            omegas.len()
        )));
    }
    if steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(invalid("noise_std must be finite and non-negative"));
    }
    for (p, &w) in omegas.iter().enumerate() {
        if !(w > -PI && w <= PI) {
            return Err(invalid(format!("frequency {w} outside (-π, π]")));
        }
        if omegas[..p].contains(&w) {
            return Err(invalid(format!("duplicate frequency {w}")));
        }
    }
    let mut noise = GaussianSource::new(seed);
    let scale = noise_std / 2f64.sqrt();
    let values = (0..steps)
        .map(|t| {
            let mut v: Complex64 = amps
                .iter()
                .zip(omegas)
                .map(|(a, &w)| a * Complex64::cis(w * t as f64))
                .sum();
            if noise_std > 0.0 {
                let re = noise.standard_normal();
                let im = noise.standard_normal();
                v += Complex64::new(re, im) * scale;
            }
            v
        })
        .collect();
    let series = TimeSeries::new(values, 1.0, "tones")?;
    Ok(SyntheticTones {
        series,
        energies: amps.iter().map(|a| a.norm_sqr()).collect(),
        omegas: omegas.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecipe {
    /// `|a_ω|` of the tone; the real signal is `2 |a_ω| cos(2πωt + φ)`.
    pub tone_abs_a: f64,
    pub trend_slope: f64,
    pub offset: f64,
    pub noise_std: f64,
}

impl CellRecipe {
    /// `|a_ω|` expected after removing the trend and rescaling to unit
    /// variance; NaN when the cell has no variance to normalize.
    pub fn normalized_abs_a(&self) -> f64 {
        let var = 2.0 * self.tone_abs_a * self.tone_abs_a + self.noise_std * self.noise_std;
        if var > 0.0 {
            self.tone_abs_a / var.sqrt()
        } else {
            f64::NAN
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecipe {
    /// Tone frequency in cycles per step.
    pub omega: f64,
    pub dt: f64,
    /// Row-major `[iy][ix]`.
    pub cells: Vec<CellRecipe>,
}

impl GridRecipe {
    pub fn uniform(nx: usize, ny: usize, omega: f64, dt: f64, cell: CellRecipe) -> Self {
        Self {
            omega,
            dt,
            cells: vec![cell; nx * ny],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTruth {
    /// `|a_ω|` of the raw cell signal, `[iy][ix]` row-major.
    pub abs_a: Vec<f64>,
    /// `|a_ω|` after detrending and unit-variance normalization.
    pub abs_a_normalized: Vec<f64>,
}

pub fn synth_grid(
    nx: usize,
    ny: usize,
    steps: usize,
    recipe: &GridRecipe,
    seed: u64,
) -> Result<(GriddedDataset, GridTruth)> {
    if nx == 0 || ny == 0 || steps == 0 {
        return Err(invalid("grid dimensions and steps must be at least 1"));
    }
    if recipe.cells.len() != nx * ny {
        return Err(invalid(format!(
            "recipe has {} cells for a {nx}x{ny} grid",
            recipe.cells.len()
        )));
    }
    let cells = nx * ny;
    let mut rng = GaussianSource::new(seed);
    let phases: Vec<f64> = (0..cells).map(|_| TAU * rng.uniform()).collect();
    let mut data = vec![0.0; cells * steps];
    for t in 0..steps {
        let turns = (recipe.omega * t as f64).rem_euclid(1.0);
        for (c, cell) in recipe.cells.iter().enumerate() {
            let mut v = cell.offset
                + cell.trend_slope * t as f64
                + 2.0 * cell.tone_abs_a * (TAU * turns + phases[c]).cos();
            if cell.noise_std > 0.0 {
                v += cell.noise_std * rng.standard_normal();
            }
            data[t * cells + c] = v;
        }
    }
    let dataset = GriddedDataset::new(nx, ny, steps, recipe.dt, data)?;
    let truth = GridTruth {
        abs_a: recipe.cells.iter().map(|c| c.tone_abs_a).collect(),
        abs_a_normalized: recipe.cells.iter().map(CellRecipe::normalized_abs_a).collect(),
    };
    Ok((dataset, truth))
}
