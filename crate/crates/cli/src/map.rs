use koopspec::grid::{amplitude_map, AmplitudeMap, GriddedDataset};
use serde::Serialize;

use crate::args::MapArgs;
use crate::output::{canonical, csv_float, emit, write_file};
use crate::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct MapSummary {
    input: String,
    nx: usize,
    ny: usize,
    nt: usize,
    omega_cycles: f64,
    t_used: usize,
    detrend: bool,
    normalize: bool,
    cells: usize,
    degenerate_cells: usize,
    mean_abs_a: f64,
    min_abs_a: f64,
    max_abs_a: f64,
}

pub fn cmd_map(a: &MapArgs) -> CliResult<AmplitudeMap> {
    if !(a.omega > -0.5 && a.omega <= 0.5) {
        return Err(CliError::Usage(format!(
            "--omega {} lies outside (-0.5, 0.5] cycles per step",
            a.omega
        )));
    }
    let ds = GriddedDataset::read(&a.input)?;
    let t_used = a.t_used.unwrap_or(ds.nt);
    let map = amplitude_map(&ds, a.omega, t_used, a.detrend, a.normalize)?;

    let mut csv = String::from("ix,iy,abs_a\n");
    for c in &map.cells {
        csv.push_str(&format!("{},{},{}\n", c.ix, c.iy, csv_float(c.abs_a)));
    }
    write_file(&a.out, csv.as_bytes())?;

    let finite: Vec<f64> = map.cells.iter().map(|c| c.abs_a).filter(|v| !v.is_nan()).collect();
    let summary = MapSummary {
        input: a.input.display().to_string(),
        nx: ds.nx,
        ny: ds.ny,
        nt: ds.nt,
        omega_cycles: a.omega,
        t_used,
        detrend: a.detrend,
        normalize: a.normalize,
        cells: map.cells.len(),
        degenerate_cells: map.degenerate_cells,
        mean_abs_a: if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        min_abs_a: finite.iter().copied().fold(f64::NAN, f64::min),
        max_abs_a: finite.iter().copied().fold(f64::NAN, f64::max),
    };
    emit(a.summary.as_deref(), &canonical(&summary)?)?;
    Ok(map)
}
