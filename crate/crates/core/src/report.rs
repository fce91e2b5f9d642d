//! Canonical JSON: keys sorted, compact separators, every float written with
//! 17 significant digits in exponent form, non-finite floats as `null`.
//! Parsing canonical output and re-emitting it reproduces the same bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{invalid, Result};

struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

fn emit(value: &Value) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| invalid(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Canonical text for any serializable value.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(value).map_err(|e| invalid(e.to_string()))?;
    emit(&value)
}

/// Re-emits JSON text in canonical form.
pub fn canonicalize(text: &str) -> Result<String> {
    let value: Value = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    emit(&value)
}
