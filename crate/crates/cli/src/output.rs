//! Report assembly and emission. Every file starts with provenance: a hash
//! of the echoed inputs, the seed and the RNG identifier. Wall time is
//! reported on stderr only, so identical invocations give identical files.

use std::io::Write;
use std::path::Path;

use loclab_core::rng::RNG_ID;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub rng: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub inputs: Value,
    pub results: Value,
}

impl Report {
    /// `seed` is `None` for purely analytic commands.
    pub fn new(command: &str, inputs: Value, seed: Option<u64>, results: impl Serialize) -> Result<Self, Failure> {
        let canonical = serde_json::to_vec(&inputs).map_err(|e| Failure::Runtime(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(&canonical));
        Ok(Report {
            provenance: Provenance {
                tool: "loclab".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config_sha256: hash,
                seed,
                rng: seed.map(|_| RNG_ID.to_string()),
            },
            inputs,
            results: serde_json::to_value(results).map_err(|e| Failure::Runtime(e.to_string()))?,
        })
    }

    pub fn render(&self, format: Format) -> Result<String, Failure> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| Failure::Runtime(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> Result<String, Failure> {
        let p = &self.provenance;
        let mut out = String::new();
        out.push_str(&format!("# {} {}\n", p.tool, p.version));
        out.push_str(&format!("# command: {}\n", p.command));
        out.push_str(&format!("# config_sha256: {}\n", p.config_sha256));
        if let Some(seed) = p.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        if let Some(rng) = &p.rng {
            out.push_str(&format!("# rng: {rng}\n"));
        }
        let rows: Vec<&Map<String, Value>> = match &self.results {
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_object().ok_or_else(|| Failure::Runtime("CSV rows must be objects".into())))
                .collect::<Result<_, _>>()?,
            Value::Object(o) => vec![o],
            _ => return Err(Failure::Runtime("result cannot be written as CSV".into())),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(first) = rows.first() {
            w.write_record(first.keys()).map_err(csv_err)?;
            for row in &rows {
                w.write_record(row.values().map(cell)).map_err(csv_err)?;
            }
        }
        let body = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| Failure::Runtime(e.to_string()))?);
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}
