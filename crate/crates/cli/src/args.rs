use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "koopspec", version, about = "Koopman eigenfrequencies and energies from a single time series")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a reference series or gridded field.
    Simulate(SimulateArgs),
    /// Double-limit scan of renormalized Gram eigenvalues plus mode extraction.
    Analyze(AnalyzeArgs),
    /// Mean-ergodic amplitude at one frequency or over a frequency range.
    Yosida(YosidaArgs),
    /// Per-cell amplitude map of a gridded field.
    Map(MapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    Lorenz63,
    Rotor,
    Tones,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractionArg {
    DftPeak,
    LocalMaxima,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub system: System,
    #[arg(long, value_parser = parse_steps)]
    pub steps: usize,
    /// Time step (default 0.01, or 1 for `grid`).
    #[arg(long, value_parser = parse_positive)]
    pub dt: Option<f64>,
    /// Rotation period, e.g. `pi/5`.
    #[arg(long, value_parser = parse_positive, default_value = "pi/5")]
    pub period: f64,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub z0: f64,
    /// Initial rotor angle in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub xi0: f64,
    /// Tone moduli, comma separated.
    #[arg(long, value_parser = parse_real, value_delimiter = ',', allow_hyphen_values = true)]
    pub amps: Option<Vec<f64>>,
    /// Tone phases in radians (default all zero).
    #[arg(long, value_parser = parse_real, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Option<Vec<f64>>,
    /// Tone frequencies in radians per step.
    #[arg(long, value_parser = parse_real, value_delimiter = ',', allow_hyphen_values = true)]
    pub omegas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub nx: usize,
    #[arg(long, default_value_t = 16)]
    pub ny: usize,
    /// Grid tone `|a|`; each cell carries `2|a| cos(2πωt + φ)`.
    #[arg(long, default_value_t = 0.5)]
    pub tone_amp: f64,
    /// Grid trend per step.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub trend: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset: f64,
    /// Grid tone frequency in cycles per step.
    #[arg(long, value_parser = parse_real, default_value = "1/365.25")]
    pub omega: f64,
    /// CSV for series, header JSON for grids.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Delay counts N, strictly increasing.
    #[arg(long, value_parser = parse_count, value_delimiter = ',', required = true)]
    pub n_grid: Vec<usize>,
    /// Averaging lengths M shared by every N.
    #[arg(long, value_parser = parse_count, value_delimiter = ',', conflicts_with = "m_grid_per_n")]
    pub m_grid: Option<Vec<usize>>,
    /// Averaging lengths per N: `a,b;c,d`.
    #[arg(long, value_parser = parse_m_row, value_delimiter = ';')]
    pub m_grid_per_n: Option<Vec<MRow>>,
    #[arg(long, default_value_t = 8)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps_m: f64,
    #[arg(long, default_value_t = 0.10)]
    pub eps_n: f64,
    /// Energy floor as a fraction of the lag-0 autocovariance.
    #[arg(long, default_value_t = 0.01)]
    pub energy_floor: f64,
    #[arg(long, default_value_t = 3)]
    pub tail_window: usize,
    #[arg(long, default_value_t = 10.0)]
    pub m_over_n_floor: f64,
    /// Relative energy mismatch allowed between conjugate partners.
    #[arg(long, default_value_t = 0.1)]
    pub eps_pair: f64,
    #[arg(long, value_enum, default_value_t = ExtractionArg::DftPeak)]
    pub extraction: ExtractionArg,
    /// Samples for the mean-ergodic cross-check (default: whole series).
    #[arg(long)]
    pub t_used: Option<usize>,
    /// Seed of the iterative eigensolver's start vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the `N,M,i,sigma` table here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Dump the Gram matrix at the largest N and M (binary).
    #[arg(long)]
    pub dump_gram: Option<PathBuf>,
    /// Add wall-clock timings to the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct YosidaArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Frequency in cycles per step, inside (-0.5, 0.5].
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true, conflicts_with = "omega_range")]
    pub omega: Option<f64>,
    /// `min:max:points` in cycles per step.
    #[arg(long, value_parser = parse_omega_range, allow_hyphen_values = true)]
    pub omega_range: Option<OmegaRange>,
    /// Samples averaged (default: whole series).
    #[arg(long)]
    pub t_used: Option<usize>,
    /// Include the partial-average curve at log-spaced checkpoints.
    #[arg(long)]
    pub curve: bool,
    /// Write the `t,energy` curve here (implies `--curve`).
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Grid header JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Cycles per step.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub omega: f64,
    #[arg(long)]
    pub t_used: Option<usize>,
    #[arg(long)]
    pub detrend: bool,
    #[arg(long)]
    pub normalize: bool,
    /// `ix,iy,abs_a` CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON (default: stdout).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Real number with optional `pi` factors: `0.5`, `pi/5`, `2*pi`, `-pi/3`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let s = text.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let mut parts = body.split('/');
    let num = parts.next().unwrap_or("");
    let mut value = num
        .split('*')
        .map(factor)
        .try_fold(1.0, |acc, f| f.map(|f| acc * f))
        .map_err(|_| format!("cannot parse `{text}` as a number"))?;
    for den in parts {
        let d = factor(den).map_err(|_| format!("cannot parse `{text}` as a number"))?;
        value /= d;
    }
    let value = sign * value;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

fn factor(tok: &str) -> Result<f64, ()> {
    match tok.trim() {
        "pi" | "PI" | "π" => Ok(std::f64::consts::PI),
        t => t.parse::<f64>().map_err(|_| ()),
    }
}

fn parse_positive(text: &str) -> Result<f64, String> {
    let v = parse_real(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive value, got {text}"))
    }
}

fn parse_steps(text: &str) -> Result<usize, String> {
    let n = parse_count(text)?;
    if n == 0 {
        Err("steps must be at least 1".into())
    } else {
        Ok(n)
    }
}

/// Non-negative integer, also in exponent form (`2e5`).
pub fn parse_count(text: &str) -> Result<usize, String> {
    let t = text.trim();
    if let Ok(n) = t.parse::<usize>() {
        return Ok(n);
    }
    let v: f64 = t
        .parse()
        .map_err(|_| format!("cannot parse `{text}` as a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(format!("`{text}` is not a non-negative integer"))
    }
}

pub fn parse_count_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',').map(parse_count).collect()
}

/// One `;`-separated row of `--m-grid-per-n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MRow(pub Vec<usize>);

pub fn parse_m_row(text: &str) -> Result<MRow, String> {
    parse_count_list(text).map(MRow)
}

pub fn parse_omega_range(text: &str) -> Result<OmegaRange, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, points] = parts[..] else {
        return Err(format!("expected min:max:points, got `{text}`"));
    };
    Ok(OmegaRange {
        min: parse_real(min)?,
        max: parse_real(max)?,
        points: parse_count(points)?,
    })
}
