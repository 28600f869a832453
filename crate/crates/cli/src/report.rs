//! Report files: one JSON document and one CSV per run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Rows for the CSV file; the first line is `#schema=circlab.<command>.v<N>`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, command: &str) -> Result<Vec<u8>, CliError> {
        let mut out = format!("#schema=circlab.{command}.v{SCHEMA_VERSION}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub seed: u64,
    pub seeds: Vec<(String, u64)>,
    pub results: Value,
    pub table: Table,
}

pub struct Written {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub sha256: String,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize, seed: u64, table: Table) -> Self {
        Report {
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            seeds: Vec::new(),
            results: json!({}),
            table,
        }
    }

    /// Derives and records a per-operation seed.
    pub fn derive_seed(&mut self, label: &str, index: u64) -> u64 {
        let s = circlab::rng::derive_seed(self.seed, label, index);
        self.seeds.push((format!("{label}#{index}"), s));
        s
    }

    pub fn to_json(&self) -> Value {
        let seeds: serde_json::Map<String, Value> =
            self.seeds.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "master_seed": self.seed,
            "derived_seeds": seeds,
            "config": self.config,
            "results": self.results,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<Written, CliError> {
        fs::create_dir_all(dir)?;
        let mut body = serde_json::to_string_pretty(&self.to_json())?;
        body.push('\n');
        let csv = self.table.render(self.command)?;
        let json_path = dir.join(format!("{}.json", self.command));
        let csv_path = dir.join(format!("{}.csv", self.command));
        fs::write(&json_path, &body)?;
        fs::write(&csv_path, &csv)?;
        let mut hasher = Sha256::new();
        hasher.update(body.as_bytes());
        hasher.update(&csv);
        Ok(Written {
            json: json_path,
            csv: csv_path,
            sha256: hex::encode(hasher.finalize()),
        })
    }
}
