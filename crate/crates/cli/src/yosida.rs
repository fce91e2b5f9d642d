use koopspec::modes::cycles_to_radians;
use koopspec::{yosida_scan, yosida_with_curve, YosidaEstimate};
use serde::Serialize;

use crate::analyze::read_series;
use crate::args::{Format, YosidaArgs};
use crate::output::{canonical, csv_float, emit, write_file};
use crate::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct EstimateRow {
    omega_cycles: f64,
    omega_radians: f64,
    re: f64,
    im: f64,
    energy: f64,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    t: usize,
    energy: f64,
}

#[derive(Debug, Serialize)]
struct YosidaReport {
    input: String,
    series_len: usize,
    t_used: usize,
    estimates: Vec<EstimateRow>,
    /// Largest-energy entry of a range scan.
    peak: Option<EstimateRow>,
    curve: Option<Vec<CurveRow>>,
}

fn in_band(w: f64) -> bool {
    w > -0.5 && w <= 0.5
}

fn row(e: &YosidaEstimate) -> EstimateRow {
    EstimateRow {
        omega_cycles: e.omega,
        omega_radians: cycles_to_radians(e.omega),
        re: e.a_omega.re,
        im: e.a_omega.im,
        energy: e.energy(),
    }
}

pub fn cmd_yosida(a: &YosidaArgs) -> CliResult<()> {
    let want_curve = a.curve || a.curve_csv.is_some();
    // Frequencies are checked before touching the input.
    match (a.omega, a.omega_range) {
        (Some(w), None) if !in_band(w) => {
            return Err(CliError::Usage(format!(
                "--omega {w} lies outside (-0.5, 0.5] cycles per step"
            )))
        }
        (None, Some(r)) if !(in_band(r.min) && in_band(r.max) && r.min < r.max) => {
            return Err(CliError::Usage(format!(
                "--omega-range {}:{} must be increasing inside (-0.5, 0.5]",
                r.min, r.max
            )))
        }
        (None, None) => {
            return Err(CliError::Usage("give --omega or --omega-range".into()))
        }
        _ => {}
    }

    let series = read_series(&a.input)?;
    let t_used = a.t_used.unwrap_or(series.len());
    if t_used == 0 || t_used > series.len() {
        return Err(CliError::Usage(format!(
            "--t-used {t_used} must be in 1..={}",
            series.len()
        )));
    }

    let (estimates, curve, peak) = match (a.omega, a.omega_range) {
        (Some(w), _) => {
            let est = yosida_with_curve(&series, w, t_used, want_curve)?;
            let curve = est.partial_curve.as_ref().map(|pts| {
                pts.iter()
                    .map(|p| CurveRow {
                        t: p.t,
                        energy: p.a.norm_sqr(),
                    })
                    .collect::<Vec<_>>()
            });
            (vec![est], curve, None)
        }
        (None, Some(r)) => {
            let scan = yosida_scan(&series, r.min, r.max, r.points, t_used)?;
            let best = scan
                .iter()
                .max_by(|x, y| x.energy().total_cmp(&y.energy()))
                .map(row);
            let curve = match (&best, want_curve) {
                (Some(b), true) => {
                    let est = yosida_with_curve(&series, b.omega_cycles, t_used, true)?;
                    est.partial_curve.map(|pts| {
                        pts.iter()
                            .map(|p| CurveRow {
                                t: p.t,
                                energy: p.a.norm_sqr(),
                            })
                            .collect()
                    })
                }
                _ => None,
            };
            (scan, curve, best)
        }
        (None, None) => unreachable!("rejected above"),
    };

    if let (Some(path), Some(points)) = (&a.curve_csv, &curve) {
        let mut text = String::from("t,energy\n");
        for p in points {
            text.push_str(&format!("{},{}\n", p.t, csv_float(p.energy)));
        }
        write_file(path, text.as_bytes())?;
    }

    let rows: Vec<EstimateRow> = estimates.iter().map(row).collect();
    let text = match a.format {
        Format::Json => canonical(&YosidaReport {
            input: a.input.display().to_string(),
            series_len: series.len(),
            t_used,
            estimates: rows,
            peak,
            curve,
        })?,
        Format::Csv => {
            let mut text = String::from("omega_cycles,re,im,energy\n");
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_float(r.omega_cycles),
                    csv_float(r.re),
                    csv_float(r.im),
                    csv_float(r.energy)
                ));
            }
            text
        }
    };
    emit(a.out.as_deref(), &text)
}
