//! Minimal CSV table with deterministic formatting.

use gmmce_core::error::Result;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fixed-precision scientific rendering so identical runs produce
/// byte-identical files.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.10e}")
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parse a cell as float.
    pub fn cell_f64(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col].parse().expect("numeric cell")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_indexes() {
        let mut t = CsvTable::new(vec!["SNR".into(), "full".into()]);
        t.push_row(vec!["0".into(), fmt_float(0.25)]);
        let s = t.to_csv_string();
        assert!(s.starts_with("SNR,full\n0,2.5"));
        assert_eq!(t.column("full"), Some(1));
        assert!((t.cell_f64(0, 1) - 0.25).abs() < 1e-15);
    }
}
