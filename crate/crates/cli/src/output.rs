//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use dde_core::io::{fmt_f64, state_header};
use dde_core::StateField;
use serde::Serialize;

use crate::Failure;

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("--out {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write through a temporary file in the same directory, then rename.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let target = self.path(name);
        let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }
}

/// One row per element: index, weight, packed strain and stress.
pub fn field_csv(field: &StateField) -> String {
    let mut header = vec!["element".to_string(), "weight".to_string()];
    header.extend(state_header(field.dim()));
    let mut out = header.join(",");
    out.push('\n');
    for (e, (s, w)) in field.states().iter().zip(field.weights()).enumerate() {
        let mut row = vec![e.to_string(), fmt_f64(*w)];
        row.extend(s.to_row().into_iter().map(fmt_f64));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
