use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use ulatv::certifier::Provenance;

use crate::config::Operation;
use crate::error::CliError;

/// A rectangular CSV table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal, switching to exponent form far from 1.
pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Where a non-formula input to the result came from.
#[derive(Clone, Debug, Serialize)]
pub struct InputSource {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

/// What an operation produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub inputs: Vec<InputSource>,
    pub curves: Option<Table>,
    pub densities: Option<Table>,
    /// Asserted inequalities that failed; nonempty means exit 3.
    pub failures: Vec<String>,
    /// Lines for standard output.
    pub report: Vec<String>,
}

#[derive(Serialize)]
struct Metadata {
    /// The only field that differs between identical runs.
    generated_unix_seconds: u64,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    operation: &'static str,
    config_sha256: String,
    status: &'static str,
    failures: &'a [String],
    inputs: &'a [InputSource],
    result: &'a Value,
    metadata: Metadata,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_artifacts(dir: &Path, op: Operation, config_bytes: &[u8], out: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let env = Envelope {
        tool: "ulatv",
        version: env!("CARGO_PKG_VERSION"),
        operation: op.name(),
        config_sha256: sha256_hex(config_bytes),
        status: if out.failures.is_empty() { "ok" } else { "validation_failed" },
        failures: &out.failures,
        inputs: &out.inputs,
        result: &out.result,
        metadata: Metadata {
            generated_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        },
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(format!("cli: json: {e}")))?;
    text.push('\n');
    fs::write(dir.join("result.json"), text)?;
    if let Some(t) = &out.curves {
        t.write(&dir.join("curves.csv"))?;
    }
    if let Some(t) = &out.densities {
        t.write(&dir.join("densities.csv"))?;
    }
    Ok(())
}
