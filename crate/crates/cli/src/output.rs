use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, CliResult};

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn canonical<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(koopspec::report::to_canonical_json(value)?)
}

/// `rotor.csv` -> `rotor.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// CSV cell for a float: 17 significant digits, `NaN` for missing.
pub fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}
