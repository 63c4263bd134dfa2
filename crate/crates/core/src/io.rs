//! CSV output with a provenance comment line, and config hashing.
//!
//! Every file starts with `# aqec <version> config=<sha256>` followed by a
//! header row. Readers skip lines starting with `#`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the compact JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(hex(&Sha256::digest(&json)))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The comment line written at the top of every CSV.
pub fn provenance_line(config_hash: &str) -> String {
    format!("# aqec {TOOLKIT_VERSION} config={config_hash}")
}

/// A table of string cells under named columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) -> Result<()> {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        if row.len() != self.headers.len() {
            return Err(Error::Structural(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.headers.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Numeric row with full round-trip precision.
    pub fn push_f64(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|v| format!("{v:e}")))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Parses one column as floats.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .column(name)
            .ok_or_else(|| Error::Argument(format!("no column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|e| Error::Io(format!("column {name}: '{}' {e}", r[k])))
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W, config_hash: &str) -> Result<()> {
        writeln!(out, "{}", provenance_line(config_hash))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path, config_hash: &str) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?), config_hash)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(csv_err))
            .collect::<Result<_>>()?;
        Ok(Self { headers, rows })
    }
}

/// The first line of a CSV if it is a provenance comment.
pub fn read_provenance(path: &Path) -> Result<Option<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().next().filter(|l| l.starts_with('#')).map(String::from))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_values_and_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(["tau", "fidelity"]);
        t.push_f64(&[0.6, 0.838_4]).unwrap();
        t.push_f64(&[1.0 / 3.0, f64::MIN_POSITIVE]).unwrap();
        t.write_csv(&path, "abc123").unwrap();

        let back = Table::read_csv(&path).unwrap();
        assert_eq!(back.headers, t.headers);
        assert_eq!(back.column_f64("tau").unwrap(), vec![0.6, 1.0 / 3.0]);
        assert_eq!(back.column_f64("fidelity").unwrap()[1], f64::MIN_POSITIVE);
        let line = read_provenance(&path).unwrap().unwrap();
        assert!(line.contains("config=abc123"));
        assert!(line.contains(TOOLKIT_VERSION));
    }

    #[test]
    fn ragged_row_rejected() {
        let mut t = Table::new(["a", "b"]);
        assert!(t.push([1.0]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"x": 1})).unwrap();
        let b = config_hash(&serde_json::json!({"x": 1})).unwrap();
        let c = config_hash(&serde_json::json!({"x": 2})).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
