use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use koopspec::matrices::write_matrix_dump;
use koopspec::modes::radians_to_cycles;
use koopspec::scan::run_scan_with;
use koopspec::series::lag0_drift;
use koopspec::{
    build_gram, extract_frequency, pair_conjugates, yosida_scan, EigenOptions, Extraction,
    ModeEstimate, ScanGrid, ScanReport, TimeSeries, ToleranceConfig, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::args::{AnalyzeArgs, ExtractionArg, Format};
use crate::output::{canonical, csv_float, emit, write_file};
use crate::{CliError, CliResult};

/// Points in the local frequency search around each extracted mode.
const REFINE_POINTS: usize = 129;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub input: String,
    pub label: String,
    pub series_len: usize,
    pub dt: f64,
    pub is_real: bool,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<Vec<usize>>,
    pub top_k: usize,
    pub tolerances: ToleranceConfig,
    pub eps_pair: f64,
    pub extraction: Extraction,
    pub t_used: usize,
    pub eigen_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeReport {
    #[serde(flatten)]
    pub mode: ModeEstimate,
    pub omega_cycles: f64,
    pub verdict: Verdict,
}

/// Mean-ergodic energy at the best frequency near an extracted mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YosidaCheck {
    pub index: usize,
    pub omega_cycles: f64,
    pub energy: f64,
    pub sigma: f64,
    /// `|energy - sigma| / sigma`.
    pub relative_difference: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rho0: f64,
    pub energy_floor: f64,
    /// Relative change of the lag-0 estimate between the full series and its
    /// first half.
    pub lag0_drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub scan_seconds: f64,
    pub modes_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub scan: ScanReport,
    pub modes: Vec<ModeReport>,
    pub yosida: Vec<YosidaCheck>,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> CliResult<String> {
        canonical(self)
    }

    /// `N,M,i,sigma` rows.
    pub fn sigma_csv(&self) -> String {
        let mut out = String::from("N,M,i,sigma\n");
        for (n, m, i, s) in self.scan.rows() {
            out.push_str(&format!("{n},{m},{i},{}\n", csv_float(s)));
        }
        out
    }
}

pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TimeSeries::read_csv(BufReader::new(file), label).map_err(|e| match e {
        koopspec::Error::Parse { .. } => CliError::Parse(format!("{}: {e}", path.display())),
        other => other.into(),
    })
}

fn build_grid(a: &AnalyzeArgs, len: usize) -> CliResult<ScanGrid> {
    let m_grid = match (&a.m_grid, &a.m_grid_per_n) {
        (Some(m), None) => vec![m.clone(); a.n_grid.len()],
        (None, Some(per_n)) => per_n.iter().map(|r| r.0.clone()).collect(),
        _ => return Err(CliError::Usage("give one of --m-grid or --m-grid-per-n".into())),
    };
    if m_grid.len() != a.n_grid.len() {
        return Err(CliError::Usage(format!(
            "--m-grid-per-n has {} rows for {} values of N",
            m_grid.len(),
            a.n_grid.len()
        )));
    }
    let grid = ScanGrid::new(a.n_grid.clone(), m_grid, a.top_k, a.m_over_n_floor)?;
    let bad = grid.infeasible_cells(len);
    if !bad.is_empty() {
        let cells: Vec<String> = bad
            .iter()
            .map(|&(k, j)| {
                let n = grid.n_values[k];
                let max_m = len.saturating_sub(n + 1);
                format!(
                    "(N={n}, M={}) needs {} samples, max usable M at this N is {max_m}",
                    grid.m_values_per_n[k][j],
                    n + grid.m_values_per_n[k][j] + 1
                )
            })
            .collect();
        return Err(CliError::Usage(format!(
            "grid infeasible for a series of {len} samples: {}",
            cells.join("; ")
        )));
    }
    Ok(grid)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> CliResult<AnalysisReport> {
    let series = read_series(&a.input)?;
    let report = analyze_series(&series, a)?;
    let text = match a.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.sigma_csv(),
    };
    emit(a.out.as_deref(), &text)?;
    if let Some(p) = &a.plot_data {
        write_file(p, report.sigma_csv().as_bytes())?;
    }
    if let Some(p) = &a.dump_gram {
        let n = *report.scan.n_values.last().expect("non-empty grid");
        let m = *report.scan.m_values.last().and_then(|r| r.last()).expect("non-empty grid");
        let g = build_gram(&series, n, m)?;
        let file = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let mut w = BufWriter::new(file);
        write_matrix_dump(&mut w, g.entries())?;
        w.flush()?;
    }
    Ok(report)
}

/// The scan, mode extraction, conjugate pairing and mean-ergodic
/// cross-check, without any file output.
pub fn analyze_series(series: &TimeSeries, a: &AnalyzeArgs) -> CliResult<AnalysisReport> {
    let tol = ToleranceConfig {
        eps_m: a.eps_m,
        eps_n: a.eps_n,
        tail_window: a.tail_window,
        energy_floor_fraction: a.energy_floor,
        m_over_n_floor: a.m_over_n_floor,
    };
    let grid = build_grid(a, series.len())?;
    let t_used = a.t_used.unwrap_or(series.len());
    if t_used == 0 || t_used > series.len() {
        return Err(CliError::Usage(format!(
            "--t-used {t_used} must be in 1..={}",
            series.len()
        )));
    }
    let extraction = match a.extraction {
        ExtractionArg::DftPeak => Extraction::DftPeak,
        ExtractionArg::LocalMaxima => Extraction::LocalMaximaCount,
    };
    let eigen = EigenOptions {
        seed: a.seed,
        ..EigenOptions::default()
    };

    let start = Instant::now();
    let scan = run_scan_with(series, &grid, &tol, &eigen)?;
    let scan_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let dim = scan.final_n() + 1;
    let mut found = Vec::new();
    for (i, verdict) in scan.verdicts.iter().enumerate() {
        if let Verdict::Eigenfrequency { energy } = *verdict {
            let freq = extract_frequency(&scan.final_eigenvectors[i], extraction)?;
            found.push(ModeEstimate::new(i, energy, &freq));
        }
    }
    let paired = pair_conjugates(&found, series.is_real(), a.eps_pair, dim);
    let mut checks = Vec::with_capacity(paired.len());
    for mode in &paired {
        checks.push(yosida_check(series, mode, dim, t_used)?);
    }
    let modes = paired
        .into_iter()
        .map(|mode| ModeReport {
            omega_cycles: radians_to_cycles(mode.omega),
            verdict: scan.verdicts[mode.index],
            mode,
        })
        .collect();
    let modes_seconds = start.elapsed().as_secs_f64();

    let diagnostics = Diagnostics {
        rho0: scan.rho0,
        energy_floor: scan.energy_floor,
        lag0_drift: if series.len() >= 2 {
            lag0_drift(series, series.len())?
        } else {
            0.0
        },
    };
    let config = AnalysisConfig {
        input: a.input.display().to_string(),
        label: series.label().to_string(),
        series_len: series.len(),
        dt: series.dt(),
        is_real: series.is_real(),
        n_grid: grid.n_values.clone(),
        m_grid: grid.m_values_per_n.clone(),
        top_k: grid.top_k,
        tolerances: tol,
        eps_pair: a.eps_pair,
        extraction,
        t_used,
        eigen_seed: a.seed,
    };
    Ok(AnalysisReport {
        config,
        scan,
        modes,
        yosida: checks,
        diagnostics,
        timings: a.timings.then_some(Timings {
            scan_seconds,
            modes_seconds,
        }),
    })
}

/// Searches `±1/(8D)` cycles around the extracted frequency for the largest
/// mean-ergodic energy, narrowing the grid until its step is below
/// `0.01 / t_used`.
fn yosida_check(
    series: &TimeSeries,
    mode: &ModeEstimate,
    dim: usize,
    t_used: usize,
) -> CliResult<YosidaCheck> {
    let mut center = radians_to_cycles(mode.omega);
    let mut half = 1.0 / (8.0 * dim as f64);
    let best = loop {
        let lo = (center - half).max(-0.5 + 1e-12);
        let hi = (center + half).min(0.5);
        let scan = yosida_scan(series, lo, hi, REFINE_POINTS, t_used)?;
        let best = scan
            .into_iter()
            .max_by(|x, y| x.energy().total_cmp(&y.energy()))
            .expect("scan has points");
        let step = (hi - lo) / (REFINE_POINTS - 1) as f64;
        if step * t_used as f64 <= 0.01 {
            break best;
        }
        center = best.omega;
        half = 2.0 * step;
    };
    let energy = best.energy();
    Ok(YosidaCheck {
        index: mode.index,
        omega_cycles: best.omega,
        energy,
        sigma: mode.energy,
        relative_difference: if mode.energy > 0.0 {
            (energy - mode.energy).abs() / mode.energy
        } else {
            f64::NAN
        },
    })
}
