//! Gridded scalar fields: a JSON header plus a raw little-endian f64 body
//! laid out `[t][iy][ix]`, and the per-cell Yosida amplitude map.
//!
//! Header: `{"nx": .., "ny": .., "nt": .., "dt": .., "layout": "t-major"}`
//! with an optional `"data"` naming the body file relative to the header.
//! Without it the body is the header path with extension `.bin`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::modes::yosida;
use crate::series::{detrend_linear, normalize_unit_variance, TimeSeries};

pub const LAYOUT_T_MAJOR: &str = "t-major";

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDataset {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub dt: f64,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub dt: f64,
    pub layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

fn header_err(field: &str, message: impl Into<String>) -> Error {
    Error::Header {
        field: field.into(),
        message: message.into(),
    }
}

impl GridHeader {
    /// Parses a header, naming the first missing or ill-typed field.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| header_err("<document>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| header_err("<document>", "expected a JSON object"))?;
        let count = |field: &str| -> Result<usize> {
            let v = obj
                .get(field)
                .ok_or_else(|| header_err(field, "missing"))?;
            let n = v
                .as_u64()
                .ok_or_else(|| header_err(field, format!("expected a positive integer, found {v}")))?;
            if n == 0 {
                return Err(header_err(field, "must be at least 1"));
            }
            Ok(n as usize)
        };
        let nx = count("nx")?;
        let ny = count("ny")?;
        let nt = count("nt")?;
        let dt = obj
            .get("dt")
            .ok_or_else(|| header_err("dt", "missing"))?
            .as_f64()
            .filter(|d| d.is_finite() && *d > 0.0)
            .ok_or_else(|| header_err("dt", "expected a positive number"))?;
        let layout = obj
            .get("layout")
            .ok_or_else(|| header_err("layout", "missing"))?
            .as_str()
            .ok_or_else(|| header_err("layout", "expected a string"))?;
        if layout != LAYOUT_T_MAJOR {
            return Err(header_err(
                "layout",
                format!("unsupported layout `{layout}`, expected `{LAYOUT_T_MAJOR}`"),
            ));
        }
        let data = match obj.get("data") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(header_err("data", "expected a file name")),
        };
        Ok(Self {
            nx,
            ny,
            nt,
            dt,
            layout: layout.to_string(),
            data,
        })
    }

    fn body_path(&self, header_path: &Path) -> PathBuf {
        match &self.data {
            Some(name) => header_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(name),
            None => header_path.with_extension("bin"),
        }
    }
}

impl GriddedDataset {
    pub fn new(nx: usize, ny: usize, nt: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || nt == 0 {
            return Err(invalid("grid dimensions must be at least 1"));
        }
        if data.len() != nx * ny * nt {
            return Err(invalid(format!(
                "grid body has {} values, expected {nx} x {ny} x {nt}",
                data.len()
            )));
        }
        Ok(Self { nx, ny, nt, dt, data })
    }

    pub fn value(&self, t: usize, ix: usize, iy: usize) -> f64 {
        self.data[(t * self.ny + iy) * self.nx + ix]
    }

    pub fn cell_series(&self, ix: usize, iy: usize) -> Vec<f64> {
        (0..self.nt).map(|t| self.value(t, ix, iy)).collect()
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            nx: self.nx,
            ny: self.ny,
            nt: self.nt,
            dt: self.dt,
            layout: LAYOUT_T_MAJOR.into(),
            data: None,
        }
    }

    /// Writes `header_path` and the body next to it (`.bin`).
    pub fn write(&self, header_path: &Path) -> Result<()> {
        let mut header = self.header();
        let body = header_path.with_extension("bin");
        header.data = body.file_name().map(|n| n.to_string_lossy().into_owned());
        let text = serde_json::to_string_pretty(&header).map_err(|e| invalid(e.to_string()))?;
        fs::write(header_path, text + "\n")?;
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(body, bytes)?;
        Ok(())
    }

    pub fn read(header_path: &Path) -> Result<Self> {
        let header = GridHeader::parse(&fs::read_to_string(header_path)?)?;
        let bytes = fs::read(header.body_path(header_path))?;
        let expected = header.nx * header.ny * header.nt * 8;
        if bytes.len() != expected {
            return Err(header_err(
                "nt",
                format!(
                    "body has {} bytes, header implies {expected}",
                    bytes.len()
                ),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(header.nx, header.ny, header.nt, header.dt, data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub ix: usize,
    pub iy: usize,
    /// NaN when normalization hit a zero-variance cell.
    pub abs_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMap {
    pub cells: Vec<MapCell>,
    pub degenerate_cells: usize,
    /// Cycles per step.
    pub omega: f64,
    pub t_used: usize,
    pub detrend: bool,
    pub normalize: bool,
}

/// `|a_ω|` per cell after optional detrending and normalization.
pub fn amplitude_map(
    dataset: &GriddedDataset,
    omega: f64,
    t_used: usize,
    detrend: bool,
    normalize: bool,
) -> Result<AmplitudeMap> {
    if t_used == 0 || t_used > dataset.nt {
        return Err(invalid(format!(
            "t_used = {t_used} must be in 1..={}",
            dataset.nt
        )));
    }
    let coords: Vec<(usize, usize)> = (0..dataset.ny)
        .flat_map(|iy| (0..dataset.nx).map(move |ix| (ix, iy)))
        .collect();
    let cells = coords
        .par_iter()
        .map(|&(ix, iy)| -> Result<MapCell> {
            let raw = dataset.cell_series(ix, iy);
            let mut series = TimeSeries::from_real(&raw[..t_used], dataset.dt, format!("{ix},{iy}"))?;
            if detrend && t_used >= 2 {
                series = detrend_linear(&series)?;
            }
            if normalize {
                match normalize_unit_variance(&series) {
                    Ok(s) => series = s,
                    Err(Error::Degenerate(_)) => {
                        return Ok(MapCell { ix, iy, abs_a: f64::NAN });
                    }
                    Err(e) => return Err(e),
                }
            }
            let est = yosida(&series, omega, t_used)?;
            Ok(MapCell {
                ix,
                iy,
                abs_a: est.a_omega.norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let degenerate_cells = cells.iter().filter(|c| c.abs_a.is_nan()).count();
    Ok(AmplitudeMap {
        cells,
        degenerate_cells,
        omega,
        t_used,
        detrend,
        normalize,
    })
}
