use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// One named check in a report; `passed = None` marks a skipped check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: Value) -> Self {
        CheckResult { name: name.into(), passed: Some(passed), detail, note: None }
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed: None, detail: Value::Null, note: Some(note.into()) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Output directory plus the config every artifact is stamped with.
pub struct Sink {
    pub dir: PathBuf,
    pub hash: String,
    config: Value,
}

impl Sink {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.resolved_output_dir();
        if !dir.is_dir() {
            return Err(CliError::Io(format!("output directory {} does not exist", dir.display())));
        }
        Ok(Sink { dir, hash: cfg.hash(), config: serde_json::to_value(cfg).map_err(internal)? })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(BufWriter::new(f))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn comment(&self) -> String {
        format!("config_hash {}", self.hash)
    }

    /// CSV with a `# config_hash` line, a header and one row per entry.
    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        let mut out = self.create(name)?;
        writeln!(out, "# {}", self.comment()).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header).map_err(internal)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(internal)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn field(&self, name: &str, field: &conelab_core::solver::SolutionField) -> Result<(), CliError> {
        let out = self.create(name)?;
        field.write_csv(out, &[self.comment()]).map_err(CliError::from)?;
        let meta = json!({ "config_hash": self.hash, "field": field.meta() });
        self.write_json(&format!("{name}.json"), &meta)
    }

    /// The report document for a command.
    pub fn report(&self, name: &str, command: &str, checks: &[CheckResult], data: Value) -> Result<bool, CliError> {
        let passed = checks.iter().all(|c| c.passed != Some(false));
        let doc = json!({
            "command": command,
            "config_hash": self.hash,
            "config": self.config,
            "passed": passed,
            "checks": checks,
            "data": data,
        });
        self.write_json(name, &doc)?;
        Ok(passed)
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut out = self.create(name)?;
        serde_json::to_writer_pretty(&mut out, v).map_err(internal)?;
        writeln!(out).map_err(io)?;
        out.flush().map_err(io)
    }
}

pub fn write_failure(dir: &Path, command: &str, err: &CliError) {
    let doc = json!({ "command": command, "passed": false, "error": err.to_string(), "exit_code": err.exit_code() });
    if let Ok(text) = serde_json::to_string_pretty(&doc) {
        let _ = std::fs::write(dir.join(format!("{command}_failure.json")), text + "\n");
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}
