use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    /// RFC 3339; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
    pub version: String,
}

impl Metadata {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.name().to_string(),
            config_sha256: config.sha256(),
            seed: config.seed,
            timestamp: timestamp(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Current time, or `SOURCE_DATE_EPOCH` seconds when that variable is set.
pub fn timestamp() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map(|secs| UNIX_EPOCH + Duration::from_secs(secs))
        .unwrap_or_else(SystemTime::now);
    humantime::format_rfc3339_seconds(t).to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// Named statistics of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            metadata: Metadata::for_config(config),
            config: config.clone(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, stderr: Option<f64>) {
        self.rows.push(ResultRow {
            name: name.into(),
            value,
            stderr,
        });
    }

    pub fn get(&self, name: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Value of a row that must exist.
    pub fn value(&self, name: &str) -> Result<f64> {
        self.get(name)
            .map(|r| r.value)
            .ok_or_else(|| Error::InvalidParameter(format!("no result row named {name}")))
    }
}

/// A headered CSV file held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: &[&dyn Display]) {
        assert_eq!(fields.len(), self.header.len(), "CSV row width");
        self.rows.push(fields.iter().map(|f| f.to_string()).collect());
    }

    pub fn header(&self) -> String {
        self.header.join(",")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Result table plus the CSV files written next to it.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    pub files: Vec<(String, CsvTable)>,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&CsvTable> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes `result.json` and every CSV file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(&self.table)?;
        json.push('\n');
        std::fs::write(dir.join("result.json"), json)?;
        for (name, table) in &self.files {
            let f = std::fs::File::create(dir.join(name))?;
            let mut w = std::io::BufWriter::new(f);
            table.write(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}
