//! Run reports, CSV tables and input digests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Significant digits of every printed float.
pub const SIG_DIGITS: usize = 12;

/// `x` with [`SIG_DIGITS`] significant digits: fixed notation for
/// `1e-4 ≤ |x| < 1e12`, scientific otherwise.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    // the exponent is taken after rounding so that 9.9999999999995 prints as 10.0000000000
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').expect("scientific notation") + 1..]
        .parse()
        .expect("integer exponent");
    if (-4..12).contains(&exp) {
        format!("{:.*}", (SIG_DIGITS as i32 - 1 - exp) as usize, x)
    } else {
        sci
    }
}

/// Hex SHA-256 of the concatenated parts, each followed by a NUL byte.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for part in parts {
        h.update(part);
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A table written as CSV: one `#` metadata line (command, statement,
/// digest), a header row naming the columns and their units, then the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(meta: impl Into<String>, header: &[&str]) -> Self {
        Self {
            meta: meta.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| io::Error::other(e.to_string()))?;
        let body = String::from_utf8(bytes).map_err(|e| io::Error::other(e.to_string()))?;
        Ok(format!(
            "# {}\n{body}",
            self.meta.replace(['\r', '\n'], " ")
        ))
    }
}

/// Outcome of comparing one observed ratio range with its frozen baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineCheck {
    pub quantity: String,
    pub observed_min: f64,
    pub observed_max: f64,
    pub baseline_min: Option<f64>,
    pub baseline_max: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub step: String,
    pub millis: f64,
}

/// Everything one command computed. `values` is reproducible bitwise from
/// the same input digest; `timings` is not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub statement: String,
    pub digest: String,
    pub values: Value,
    pub baselines: Vec<BaselineCheck>,
    pub violations: Vec<String>,
    pub passed: bool,
    pub timings: Vec<Timing>,
}

impl RunReport {
    /// Pretty JSON with every float rounded to [`SIG_DIGITS`] digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        round_floats(&mut v);
        serde_json::to_string_pretty(&v).expect("values serialize") + "\n"
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = fmt_float(x)
                .parse::<f64>()
                .ok()
                .map_or(Value::Null, Value::from);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Output directory: `SPARSELAB_OUT` when set, else `flag`, else
/// `sparselab-out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    match std::env::var_os("SPARSELAB_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("sparselab-out")),
    }
}

/// Writes `<dir>/<stem>.csv` (when a table is given) and `<dir>/<stem>.json`.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    table: Option<&Table>,
    report: &RunReport,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(t) = table {
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, t.to_csv()?)?;
        written.push(path);
    }
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, report.to_json())?;
    written.push(path);
    Ok(written)
}
