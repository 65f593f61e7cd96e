//! Reproducible text output: number formatting, CSV assembly, atomic writes.
//!
//! Numbers use Rust's shortest round-trip decimal representation (at most 17
//! significant digits), `.` as decimal separator and `\n` line endings, so the
//! same values always produce the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest round-trip decimal; `inf`, `-inf` and `NaN` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:?}")
    }
}

/// Minimal CSV builder; cells are never quoted so callers pass plain tokens.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    buf: String,
    columns: usize,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = CsvTable { buf: String::new(), columns: header.len() };
        t.push_cells(header.iter().map(|s| s.as_ref().to_string()));
        t
    }

    pub fn push_row(&mut self, values: &[f64]) {
        self.push_cells(values.iter().map(|v| fmt_f64(*v)));
    }

    pub fn push_cells<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let mut n = 0;
        for (i, cell) in cells.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{cell}");
            n += 1;
        }
        debug_assert_eq!(n, self.columns, "row width must match header");
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents).map_err(|source| Error::Io { path: tmp.clone(), source })?;
    fs::rename(&tmp, path).map_err(io_err)
}
