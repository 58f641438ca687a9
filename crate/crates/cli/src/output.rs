use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::Context;
use beamadapt_core::emit::Format;
use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

impl OutputArgs {
    pub fn format(&self) -> Format {
        self.format.into()
    }

    /// Writes `bytes` to the selected destination in one go.
    pub fn write(&self, bytes: &[u8]) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    /// CSV of `rows`, or the JSON document `doc`.
    pub fn emit<R: Serialize, D: Serialize>(&self, rows: &[R], doc: &D) -> anyhow::Result<()> {
        let bytes = match self.format() {
            Format::Csv => csv_bytes(rows)?,
            Format::Json => json_bytes(doc)?,
        };
        self.write(&bytes)
    }
}

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn json_bytes<D: Serialize>(doc: &D) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}
