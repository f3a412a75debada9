//! Atomic file output and the per-run report.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Writes `contents` to `path` through a temporary file in the same
/// directory, renamed into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: String,
    pub inputs_digest: String,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// Collects emitted files and warnings for one command.
pub struct Emitter {
    dir: PathBuf,
    started: Instant,
    files: Vec<String>,
    warnings: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), started: Instant::now(), files: Vec::new(), warnings: Vec::new() }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    /// Writes `run_report.json` next to the outputs. The wall time makes it
    /// the one output that differs between identical runs.
    pub fn finish(mut self, command: &str, config: &Path, digest: String) -> CliResult<RunReport> {
        let report = RunReport {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.display().to_string(),
            inputs_digest: digest,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: std::mem::take(&mut self.files),
            warnings: std::mem::take(&mut self.warnings),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_atomic(&self.dir.join("run_report.json"), &text)?;
        Ok(report)
    }
}
