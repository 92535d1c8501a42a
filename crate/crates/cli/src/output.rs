//! Deterministic output formatting: fixed 12-significant-digit floats,
//! '\n' line endings, stable headers. Two runs with identical inputs
//! produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// Column-oriented table shared by the scan and curve commands.
#[derive(Debug, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 12 significant digits, scientific, locale-independent.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn write_table(table: &Table, format: OutputFormat, path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(name, &v)| {
                        if name == "enhanced" {
                            format!("{}", v as i64)
                        } else {
                            fmt_float(v)
                        }
                    })
                    .collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, table)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}
