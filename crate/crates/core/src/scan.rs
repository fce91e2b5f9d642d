//! Double-limit scan: renormalized Gram eigenvalues over a grid of delay
//! counts `N_k` and averaging lengths `M_{k,j}`, with a convergence test in
//! `M` at each `N_k` followed by one across `N_k`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrices::{build_gram_multi, top_eigen_with, EigenOptions, SolverPath};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative spread allowed over the tail of an `M` row.
    pub eps_m: f64,
    /// Relative step allowed between the last two `N`.
    pub eps_n: f64,
    pub tail_window: usize,
    /// Energy floor as a fraction of the lag-0 autocovariance.
    pub energy_floor_fraction: f64,
    /// Required ratio `M_{k,1} / N_k`.
    pub m_over_n_floor: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_m: 0.05,
            eps_n: 0.10,
            tail_window: 3,
            energy_floor_fraction: 0.01,
            m_over_n_floor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub n_values: Vec<usize>,
    pub m_values_per_n: Vec<Vec<usize>>,
    pub top_k: usize,
    pub m_over_n_floor: f64,
}

impl ScanGrid {
    pub fn new(
        n_values: Vec<usize>,
        m_values_per_n: Vec<Vec<usize>>,
        top_k: usize,
        m_over_n_floor: f64,
    ) -> Result<Self> {
        if n_values.is_empty() {
            return Err(invalid("scan grid needs at least one N"));
        }
        if n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "N values must be strictly increasing: {n_values:?}"
            )));
        }
        if m_values_per_n.len() != n_values.len() {
            return Err(invalid(format!(
                "{} M lists given for {} N values",
                m_values_per_n.len(),
                n_values.len()
            )));
        }
        for (k, (ms, &n)) in m_values_per_n.iter().zip(&n_values).enumerate() {
            if ms.is_empty() {
                return Err(invalid(format!("no M values for N_{k} = {n}")));
            }
            if ms.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!(
                    "M values for N_{k} = {n} must be strictly increasing: {ms:?}"
                )));
            }
            if (ms[0] as f64) < m_over_n_floor * n as f64 {
                return Err(invalid(format!(
                    "M = {} is below {m_over_n_floor} x N_{k} = {n}",
                    ms[0]
                )));
            }
        }
        if top_k == 0 || top_k > n_values[0] + 1 {
            return Err(invalid(format!(
                "top_k = {top_k} must be in 1..={}",
                n_values[0] + 1
            )));
        }
        Ok(Self {
            n_values,
            m_values_per_n,
            top_k,
            m_over_n_floor,
        })
    }

    /// Same `M` list for every `N`.
    pub fn uniform(
        n_values: Vec<usize>,
        m_values: Vec<usize>,
        top_k: usize,
        m_over_n_floor: f64,
    ) -> Result<Self> {
        let per_n = vec![m_values; n_values.len()];
        Self::new(n_values, per_n, top_k, m_over_n_floor)
    }

    /// `(k, j)` cells needing more than `len` samples.
    pub fn infeasible_cells(&self, len: usize) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for (k, (&n, ms)) in self.n_values.iter().zip(&self.m_values_per_n).enumerate() {
            for (j, &m) in ms.iter().enumerate() {
                if n + m + 1 > len {
                    bad.push((k, j));
                }
            }
        }
        bad
    }

    pub fn check_feasible(&self, len: usize) -> Result<()> {
        let bad = self.infeasible_cells(len);
        if bad.is_empty() {
            return Ok(());
        }
        let cells: Vec<String> = bad
            .iter()
            .map(|&(k, j)| {
                format!(
                    "(k={k}, j={j}: N={}, M={})",
                    self.n_values[k], self.m_values_per_n[k][j]
                )
            })
            .collect();
        Err(invalid(format!(
            "grid needs N + M + 1 <= {len} samples; violated by {}",
            cells.join(", ")
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// Converged in both limits to a value above the energy floor.
    Eigenfrequency { energy: f64 },
    /// Converged, but to a value below the energy floor.
    NullEnergy,
    /// The `M` row did not settle; `first_k` is the first failing `N_k` index.
    NotConvergedInM { first_k: usize },
    NotConvergedInN,
}

impl Verdict {
    pub fn is_eigenfrequency(&self) -> bool {
        matches!(self, Verdict::Eigenfrequency { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MConvergence {
    pub converged: bool,
    /// Fewer entries than the tail window.
    pub too_short: bool,
    pub spread: f64,
}

/// Tail-window spread test on `σ` over increasing `M`:
/// `(max - min) / max(last, floor) <= eps_m` over the last `tail_window`
/// entries.
pub fn judge_convergence_in_m(
    sigma_row: &[f64],
    tol: &ToleranceConfig,
    energy_floor: f64,
) -> MConvergence {
    let window = tol.tail_window.max(1);
    if sigma_row.len() < window {
        return MConvergence {
            converged: false,
            too_short: true,
            spread: f64::NAN,
        };
    }
    let tail = &sigma_row[sigma_row.len() - window..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let last = tail[tail.len() - 1];
    let spread = (max - min) / last.max(energy_floor);
    MConvergence {
        converged: spread <= tol.eps_m,
        too_short: false,
        spread,
    }
}

/// Cauchy test on the final-`M` values across increasing `N`.
pub fn judge_convergence_in_n(
    sigma_final: &[f64],
    tol: &ToleranceConfig,
    energy_floor: f64,
) -> Verdict {
    let [.., prev, last] = sigma_final else {
        return Verdict::NotConvergedInN;
    };
    let step = (last - prev).abs() / last.max(energy_floor);
    if step > tol.eps_n {
        Verdict::NotConvergedInN
    } else if *last >= energy_floor {
        Verdict::Eigenfrequency { energy: *last }
    } else {
        Verdict::NullEnergy
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub label: String,
    pub series_len: usize,
    pub n_values: Vec<usize>,
    pub m_values: Vec<Vec<usize>>,
    pub top_k: usize,
    /// `sigma[k][j][i]` for `N_k`, `M_{k,j}`, eigenvalue index `i`.
    pub sigma: Vec<Vec<Vec<f64>>>,
    pub verdicts: Vec<Verdict>,
    /// `m_spread[i][k]`: tail spread of the `M` row at `N_k`.
    pub m_spread: Vec<Vec<f64>>,
    pub tolerances: ToleranceConfig,
    pub energy_floor: f64,
    pub rho0: f64,
    pub solver_paths: Vec<SolverPath>,
    /// Eigenvectors at the largest `N` and its largest `M`.
    #[serde(skip)]
    pub final_eigenvectors: Vec<Vec<Complex64>>,
}

impl ScanReport {
    pub fn final_n(&self) -> usize {
        *self.n_values.last().expect("non-empty grid")
    }

    /// `σ` at the largest `M` for each `N`, for eigenvalue index `i`.
    pub fn sigma_final(&self, i: usize) -> Vec<f64> {
        self.sigma
            .iter()
            .map(|rows| rows.last().expect("non-empty M list")[i])
            .collect()
    }

    /// Rows `(N, M, i, sigma)` of the scan table.
    pub fn rows(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (k, rows) in self.sigma.iter().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                for (i, &s) in row.iter().enumerate() {
                    out.push((self.n_values[k], self.m_values[k][j], i, s));
                }
            }
        }
        out
    }
}

pub fn run_scan(
    series: &TimeSeries,
    grid: &ScanGrid,
    tol: &ToleranceConfig,
) -> Result<ScanReport> {
    run_scan_with(series, grid, tol, &EigenOptions::default())
}

struct RowResult {
    sigma: Vec<Vec<f64>>,
    paths: Vec<SolverPath>,
    last_vectors: Vec<Vec<Complex64>>,
}

pub fn run_scan_with(
    series: &TimeSeries,
    grid: &ScanGrid,
    tol: &ToleranceConfig,
    eigen: &EigenOptions,
) -> Result<ScanReport> {
    grid.check_feasible(series.len())?;
    let top_k = grid.top_k;

    let rows: Vec<RowResult> = grid
        .n_values
        .par_iter()
        .zip(&grid.m_values_per_n)
        .map(|(&n, ms)| -> Result<RowResult> {
            let grams = build_gram_multi(series, n, ms)?;
            let results = grams
                .par_iter()
                .map(|g| top_eigen_with(g, top_k, eigen))
                .collect::<Result<Vec<_>>>()?;
            let sigma = results
                .iter()
                .map(|r| r.renormalized.iter().map(|s| s.max(0.0)).collect())
                .collect();
            let paths = results.iter().map(|r| r.path).collect();
            let last_vectors = results.last().expect("non-empty M list").eigenvectors.clone();
            Ok(RowResult {
                sigma,
                paths,
                last_vectors,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rho0 = series.mean_energy();
    let energy_floor = tol.energy_floor_fraction * rho0;
    let sigma: Vec<Vec<Vec<f64>>> = rows.iter().map(|r| r.sigma.clone()).collect();

    let mut verdicts = Vec::with_capacity(top_k);
    let mut m_spread = Vec::with_capacity(top_k);
    for i in 0..top_k {
        let checks: Vec<MConvergence> = sigma
            .iter()
            .map(|rows| {
                let row: Vec<f64> = rows.iter().map(|s| s[i]).collect();
                judge_convergence_in_m(&row, tol, energy_floor)
            })
            .collect();
        m_spread.push(checks.iter().map(|c| c.spread).collect());
        let verdict = match checks.iter().position(|c| !c.converged) {
            Some(first_k) => Verdict::NotConvergedInM { first_k },
            None => {
                let finals: Vec<f64> = sigma
                    .iter()
                    .map(|rows| rows.last().expect("non-empty")[i])
                    .collect();
                judge_convergence_in_n(&finals, tol, energy_floor)
            }
        };
        verdicts.push(verdict);
    }

    Ok(ScanReport {
        label: series.label().to_string(),
        series_len: series.len(),
        n_values: grid.n_values.clone(),
        m_values: grid.m_values_per_n.clone(),
        top_k,
        sigma,
        verdicts,
        m_spread,
        tolerances: tol.clone(),
        energy_floor,
        rho0,
        solver_paths: rows.iter().flat_map(|r| r.paths.iter().copied()).collect(),
        final_eigenvectors: rows.into_iter().last().expect("non-empty").last_vectors,
    })
}
