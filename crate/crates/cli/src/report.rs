use classdeg_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A command result plus the rows used for CSV output, when the command
/// is a grid sweep.
pub struct Output {
    pub result: Value,
    pub rows: Option<Table>,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Output {
    pub fn new<T: Serialize>(result: &T) -> Result<Self> {
        Ok(Output { result: serde_json::to_value(result)?, rows: None })
    }

    pub fn with_rows(mut self, table: Table) -> Self {
        self.rows = Some(table);
        self
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct Envelope<'a> {
    pub command: &'a str,
    pub instance_sha256: Option<String>,
    pub config: Value,
    pub seed: u64,
    pub workers: usize,
}

pub fn render(env: &Envelope, out: Output, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let doc = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "command": env.command,
                "instance_sha256": env.instance_sha256,
                "config": env.config,
                "seed": env.seed,
                "workers": env.workers,
                "result": out.result,
            });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => {
            let table = out
                .rows
                .ok_or_else(|| Error::InvalidInput(format!("csv output is only available for grid sweeps, not `{}`", env.command)))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(&table.header).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
        Format::Text => {
            let mut s = format!("{} {}\n", env.command, env!("CARGO_PKG_VERSION"));
            if let Some(h) = &env.instance_sha256 {
                s += &format!("instance_sha256: {h}\n");
            }
            s += &format!("seed: {}\nworkers: {}\n", env.seed, env.workers);
            match &out.result {
                Value::Object(map) => {
                    for (k, v) in map {
                        s += &format!("{k}: {v}\n");
                    }
                }
                v => s += &format!("{v}\n"),
            }
            Ok(s)
        }
    }
}
