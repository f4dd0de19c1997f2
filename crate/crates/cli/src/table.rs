//! Result tables and their CSV/JSON forms.
//!
//! CSV files hold only the data; the metadata goes to a `<file>.meta.json`
//! sidecar so the data file is byte-identical between runs with the same
//! scenario and seed. JSON output carries both in one document.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scenario::Format;
use crate::CliError;

pub const MASKED: &str = "masked";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub task: String,
    pub scenario: Value,
    pub seed: u64,
    pub samples: Option<usize>,
    pub rng: Option<String>,
    /// Cells whose numerics did not meet their tolerance.
    pub flagged: usize,
    /// Cells masked as kinematically forbidden or below threshold.
    pub masked: usize,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    pub started_unix_s: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    /// `None` is a masked cell.
    pub rows: Vec<Vec<Option<f64>>>,
    pub metadata: Metadata,
    /// Free-form structured results (density matrices, certificates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, metadata: Metadata) -> Self {
        ResultTable { columns, rows: Vec::new(), metadata, extra: None }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| CliError::Io(e.to_string()))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map_or_else(|| MASKED.to_string(), |v| v.to_string())).collect();
            w.write_record(&cells).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    #[cfg(test)]
    pub fn from_csv(data: &[u8], metadata: Metadata) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(data);
        let columns: Vec<String> =
            r.headers().map_err(|e| CliError::Io(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
            let row = rec
                .iter()
                .map(|c| match c {
                    MASKED => Ok(None),
                    v => v.parse::<f64>().map(Some).map_err(|_| CliError::Io(format!("bad number \"{v}\""))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(ResultTable { columns, rows, metadata, extra: None })
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let mut out = serde_json::to_vec_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes the table; returns the files written.
    pub fn write(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        match format {
            Format::Json => {
                std::fs::write(path, self.to_json()?).map_err(io)?;
                Ok(vec![path.to_path_buf()])
            }
            Format::Csv => {
                std::fs::write(path, self.to_csv()?).map_err(io)?;
                let meta = sidecar(path);
                let mut doc = serde_json::json!({ "columns": self.columns, "metadata": self.metadata });
                if let Some(extra) = &self.extra {
                    doc["extra"] = extra.clone();
                }
                let mut f = std::fs::File::create(&meta).map_err(io)?;
                serde_json::to_writer_pretty(&mut f, &doc).map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(f).map_err(io)?;
                Ok(vec![path.to_path_buf(), meta])
            }
        }
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}
