use std::borrow::Cow;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::HermitianSource;
use crate::error::{invalid, Result};
use crate::series::{AutocovSequence, TimeSeries};

/// Hankel trajectory matrix, row `i` = `(f(i), ..., f(i + M))`. Borrows the
/// series samples; nothing is copied until [`TrajectoryMatrix::to_dense`].
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryMatrix<'a> {
    data: &'a [Complex64],
    n_delay: usize,
    m_avg: usize,
}

impl<'a> TrajectoryMatrix<'a> {
    pub fn nrows(&self) -> usize {
        self.n_delay + 1
    }

    pub fn ncols(&self) -> usize {
        self.m_avg + 1
    }

    pub fn n_delay(&self) -> usize {
        self.n_delay
    }

    pub fn m_avg(&self) -> usize {
        self.m_avg
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(i <= self.n_delay && j <= self.m_avg, "index ({i}, {j}) out of range");
        self.data[i + j]
    }

    pub fn row(&self, i: usize) -> &'a [Complex64] {
        &self.data[i..i + self.m_avg + 1]
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.data[i + j])
    }
}

pub fn build_trajectory(
    series: &TimeSeries,
    n_delay: usize,
    m_avg: usize,
) -> Result<TrajectoryMatrix<'_>> {
    check_length(series, n_delay, m_avg)?;
    Ok(TrajectoryMatrix {
        data: &series.values()[..n_delay + m_avg + 1],
        n_delay,
        m_avg,
    })
}

/// `G[i][j] = (1/M) Σ_{t=0}^{M} f(i+t) conj(f(j+t))`.
///
/// The sum has `M + 1` terms against a `1/M` prefactor; this is intentional so
/// that the values line up with the published convention at small `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<Complex64>,
    n_delay: usize,
    m_avg: usize,
    source_label: String,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn m_avg(&self) -> usize {
        self.m_avg
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|v| v.re).sum()
    }
}

impl HermitianSource for GramMatrix {
    fn n_delay(&self) -> usize {
        self.n_delay
    }

    fn dense(&self) -> Cow<'_, DMatrix<Complex64>> {
        Cow::Borrowed(&self.entries)
    }
}

fn check_length(series: &TimeSeries, n_delay: usize, m_avg: usize) -> Result<()> {
    let needed = n_delay + m_avg + 1;
    if m_avg == 0 {
        return Err(invalid("averaging length M must be at least 1"));
    }
    if series.len() < needed {
        return Err(invalid(format!(
            "N = {n_delay}, M = {m_avg} needs {needed} samples, series has {}",
            series.len()
        )));
    }
    Ok(())
}

pub fn build_gram(series: &TimeSeries, n_delay: usize, m_avg: usize) -> Result<GramMatrix> {
    Ok(build_gram_multi(series, n_delay, &[m_avg])?.remove(0))
}

/// Gram matrices at a fixed delay count for several averaging lengths.
///
/// Each lag `l` gets one prefix-sum pass over `c_l(u) = f(u+l) conj(f(u))`;
/// every `(M, j)` entry on that diagonal is then a difference of two prefix
/// values. Total cost is `O(N (N + M_max))` regardless of how many `M` are
/// requested, and entries for a given `M` do not depend on the other `M`s.
pub fn build_gram_multi(
    series: &TimeSeries,
    n_delay: usize,
    m_values: &[usize],
) -> Result<Vec<GramMatrix>> {
    let m_max = *m_values
        .iter()
        .max()
        .ok_or_else(|| invalid("at least one averaging length is required"))?;
    for &m in m_values {
        check_length(series, n_delay, m)?;
    }
    let f = series.values();
    let dim = n_delay + 1;
    let real = series.is_real();

    // diagonals[l][mi][j] = G_M[j + l][j]
    let diagonals: Vec<Vec<Vec<Complex64>>> = (0..dim)
        .into_par_iter()
        .map(|lag| {
            let span = n_delay - lag + m_max + 1;
            let mut prefix = Vec::with_capacity(span + 1);
            let mut acc = Complex64::new(0.0, 0.0);
            prefix.push(acc);
            for u in 0..span {
                acc += f[u + lag] * f[u].conj();
                prefix.push(acc);
            }
            m_values
                .iter()
                .map(|&m| {
                    let inv = 1.0 / m as f64;
                    (0..dim - lag)
                        .map(|j| {
                            let mut v = (prefix[j + m + 1] - prefix[j]) * inv;
                            if real || lag == 0 {
                                v.im = 0.0;
                            }
                            v
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(m_values
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let mut entries = DMatrix::zeros(dim, dim);
            for (lag, diag) in diagonals.iter().enumerate() {
                for (j, &v) in diag[mi].iter().enumerate() {
                    entries[(j + lag, j)] = v;
                    entries[(j, j + lag)] = v.conj();
                }
            }
            GramMatrix {
                entries,
                n_delay,
                m_avg: m,
                source_label: series.label().to_string(),
            }
        })
        .collect())
}

/// Toeplitz Hermitian matrix `C[i][j] = ρ_{j-i}` (j >= i), `conj(ρ_{i-j})` below.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovMatrix {
    rho_source: AutocovSequence,
    n_delay: usize,
}

impl AutocovMatrix {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if j >= i {
            self.rho_source.rho[j - i]
        } else {
            self.rho_source.rho[i - j].conj()
        }
    }

    pub fn rho_source(&self) -> &AutocovSequence {
        &self.rho_source
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.n_delay + 1;
        DMatrix::from_fn(dim, dim, |i, j| self.entry(i, j))
    }
}

impl HermitianSource for AutocovMatrix {
    fn n_delay(&self) -> usize {
        self.n_delay
    }

    fn dense(&self) -> Cow<'_, DMatrix<Complex64>> {
        Cow::Owned(self.to_dense())
    }
}

pub fn build_autocov_matrix(rho: &AutocovSequence, n_delay: usize) -> Result<AutocovMatrix> {
    if rho.max_lag < n_delay || rho.rho.len() <= n_delay {
        return Err(invalid(format!(
            "autocovariance matrix with N = {n_delay} needs lags up to {n_delay}, have {}",
            rho.max_lag
        )));
    }
    Ok(AutocovMatrix {
        rho_source: rho.clone(),
        n_delay,
    })
}
