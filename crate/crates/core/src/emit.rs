//! Metrics serialization.
//!
//! CSV columns, in order: `frame, ue_id, p_tx_mw, n, sinr_db, bits,
//! power_mw, csi_age_ms, bs_id`. Absent values are empty fields. Floats use
//! the shortest representation that parses back to the same value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{MetricsRecord, Policy, RunReport};

pub const CSV_COLUMNS: [&str; 9] = [
    "frame",
    "ue_id",
    "p_tx_mw",
    "n",
    "sinr_db",
    "bits",
    "power_mw",
    "csi_age_ms",
    "bs_id",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::param("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

pub fn write_records_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::param("csv", format!("unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes per-frame records as CSV, or as a JSON array of objects.
pub fn emit_metrics(records: &[MetricsRecord], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_records_csv(records, file),
        Format::Json => {
            let mut file = file;
            serde_json::to_writer(&mut file, records)?;
            file.write_all(b"\n")?;
            file.flush()?;
            Ok(())
        }
    }
}

/// Aggregate results of one or more runs, keyed by policy and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunReport>,
}

impl Summary {
    pub fn get(&self, policy: Policy, seed: u64) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.policy == policy && r.seed == seed)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
