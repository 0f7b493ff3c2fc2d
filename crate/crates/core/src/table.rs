//! Per-node data tables and CSV export.
//!
//! Numbers are written with 17 significant digits so files reproduce the
//! underlying doubles exactly and repeated runs are byte-identical.

use std::io::Write;
use std::path::Path;

/// A rectangular table of `f64` data with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NodeTable {
    pub fn new(headers: Vec<String>) -> Self {
        NodeTable {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Renders the table as CSV text (header row, 17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_sig17(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

/// Decimal formatting with 17 significant digits.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrips_doubles() {
        let mut t = NodeTable::new(vec!["a".into(), "b".into()]);
        t.push(vec![std::f64::consts::PI, 1.0 / 3.0]);
        let csv = t.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let vals: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(vals[0], std::f64::consts::PI);
        assert_eq!(vals[1], 1.0 / 3.0);
    }
}
