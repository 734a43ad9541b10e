//! CSV and JSON emission. Numbers are written in a fixed, locale-free
//! format so repeated runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Shortest round-trip representation; scientific notation outside
/// `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes a header and numeric rows with LF line endings.
pub fn write_csv<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| HarnessError::format(path, e))?;
    w.write_record(header).map_err(|e| HarnessError::format(path, e))?;
    for r in rows {
        w.write_record(r.as_ref().iter().map(|v| fmt_f64(*v))).map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `t` followed by one column per node, named `{prefix}_{j}`.
pub fn field_header(prefix: &str, m: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((0..m).map(|j| format!("{prefix}_{j}"))).collect()
}

pub fn write_field<'a>(path: &Path, prefix: &str, m: usize, rows: impl IntoIterator<Item = (f64, &'a [f64])>) -> Result<()> {
    let rows = rows.into_iter().map(|(t, v)| {
        let mut r = Vec::with_capacity(v.len() + 1);
        r.push(t);
        r.extend_from_slice(v);
        r
    });
    write_csv(path, &field_header(prefix, m), rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| HarnessError::format(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| HarnessError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Collects the files an experiment or run has written.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        ensure_dir(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}
