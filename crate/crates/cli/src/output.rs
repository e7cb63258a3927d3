//! Atomic artifact writes and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::CliError;

pub const MANIFEST_SCHEMA: &str = "multibump.manifest/v1";

pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    /// Write through a temporary file and rename into place.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::Io(format!("cannot move {} into place: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// `<command>.manifest.json` with the resolved configuration, the
    /// artifacts written, versions, and wall time.
    pub fn manifest<C: Serialize>(&mut self, command: &str, config: &C, wall_seconds: f64, threads: usize) -> Result<PathBuf, CliError> {
        let m = json!({
            "schema": MANIFEST_SCHEMA,
            "subcommand": command,
            "config": config,
            "artifacts": self.written,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
            "wall_seconds": wall_seconds,
        });
        let name = format!("{command}.manifest.json");
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        let path = self.dir.join(&name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, s).map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::Io(format!("cannot move {} into place: {e}", path.display())))?;
        Ok(path)
    }
}

/// Versioned CSV: a `# multibump-<kind> v1 key=value ...` line, the column
/// header, then rows with full precision.
pub fn csv(kind: &str, meta: &[(&str, String)], columns: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = format!("# multibump-{kind} v1");
    for (k, v) in meta {
        s.push_str(&format!(" {k}={v}"));
    }
    s.push('\n');
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
