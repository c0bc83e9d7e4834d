//! In-memory tables and the run directory they are written to.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// A CSV file held in memory until the run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip representation, so reruns are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    /// Extra JSON files (name, content).
    pub documents: Vec<(String, Value)>,
    /// Command-specific numbers recorded in the manifest.
    pub summary: Value,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    seed: Option<u64>,
    files: Vec<String>,
    summary: &'a Value,
    determinism: &'static str,
    wall_time_seconds: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_table(dir: &Path, table: &Table) -> CliResult<()> {
    let path = dir.join(&table.name);
    let csv_err = |source| CliError::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&path))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialise");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Writes tables, documents and manifest.json into `dir`.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    artifacts: &Artifacts,
    wall_time_seconds: f64,
) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![];
    for table in &artifacts.tables {
        write_table(dir, table)?;
        files.push(table.name.clone());
    }
    for (name, value) in &artifacts.documents {
        write_json(&dir.join(name), value)?;
        files.push(name.clone());
    }
    let manifest = Manifest {
        tool: "billiard",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        seed: config.seed,
        files,
        summary: &artifacts.summary,
        determinism: "data files depend only on the config and seed; only this manifest's wall time varies",
        wall_time_seconds,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
