//! Artifact writing.
//!
//! Every output file is written to a same-directory temporary name and
//! renamed into place, so an interrupted run never leaves a half-written
//! artifact where a complete one is expected.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Render one CSV document from a header line and prebuilt rows.
pub fn render(header: &str, rows: &[String]) -> String {
    let body: usize = rows.iter().map(|r| r.len() + 1).sum();
    let mut out = String::with_capacity(header.len() + 1 + body);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Write `content` at `path` atomically.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let tmp = tmp_name(path);
    fs::write(&tmp, content)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::runtime(format!("cannot move output into {}: {e}", path.display()))
    })
}

fn tmp_name(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Companion file next to a primary output: `maps.csv` with tag `events`
/// becomes `maps.events.csv` (the extension survives).
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{tag}.{ext}"),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}
