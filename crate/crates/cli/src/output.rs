//! Deterministic result serialization: fixed-precision number formatting,
//! CSV assembly, and atomic write-then-rename file emission.
//!
//! Identical inputs must produce byte-identical files, so every float that
//! reaches an output file goes through [`fmt12`] (12 significant digits,
//! scientific notation, `.` decimal separator, no locale dependence) and
//! JSON documents carry those exact digit strings via the arbitrary-
//! precision number representation.

use anyhow::{Context, Result};
use serde_json::Value;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

/// Formats a float with 12 significant digits in scientific notation.
///
/// Non-finite values format as `inf`, `-inf`, or `nan`; those never appear
/// in CSV data columns but can show up in diagnostic fields such as the
/// deleted-state mass ratio.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// A JSON value carrying exactly the digits [`fmt12`] produces.
///
/// Finite floats become arbitrary-precision JSON numbers so the document
/// contains the rounded literal rather than a shortest-round-trip
/// rendering; non-finite floats become strings (JSON has no literal for
/// them).
pub fn json_num(v: f64) -> Value {
    if v.is_finite() {
        match serde_json::Number::from_str(&fmt12(v)) {
            Ok(num) => Value::Number(num),
            Err(_) => Value::String(fmt12(v)),
        }
    } else {
        Value::String(fmt12(v))
    }
}

/// Incremental CSV builder with a fixed header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Csv {
        let mut text = columns.join(",");
        text.push('\n');
        Csv {
            text,
            columns: columns.len(),
        }
    }

    /// Appends one row; the field count must match the header.
    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns, "CSV row width mismatch");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// The output directory of a run; all files are written atomically.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    /// Creates the directory (and parents) if needed.
    pub fn create(path: &str) -> Result<OutDir> {
        let dir = PathBuf::from(path);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutDir { dir })
    }

    /// Writes `bytes` to `name` inside the directory via a temporary file
    /// and an atomic rename, so readers never observe a partial file.
    pub fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("cannot stage {}", target.display()))?;
        tmp.write_all(bytes)
            .with_context(|| format!("cannot write {}", target.display()))?;
        tmp.persist(&target)
            .with_context(|| format!("cannot finalize {}", target.display()))?;
        Ok(target)
    }
}

/// Serializes a JSON document with stable formatting and a trailing
/// newline.
pub fn json_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).context("cannot serialize JSON output")?;
    bytes.push(b'\n');
    Ok(bytes)
}
