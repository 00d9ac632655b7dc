use std::io::Write;

use serde::Serialize;

use crate::{GoatError, Result};

/// Header-first CSV table. Columns listed in `timing` hold wall-clock data
/// and are excluded from reproducibility comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub timing: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str], timing: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            timing: timing.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of one column parsed as `f64`.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| r[c].parse().unwrap_or(f64::NAN))
            .collect()
    }

    /// Copy with the timing columns removed.
    pub fn without_timing(&self) -> Table {
        let keep: Vec<usize> = (0..self.header.len())
            .filter(|&i| !self.timing.contains(&self.header[i]))
            .collect();
        Table {
            header: keep.iter().map(|&i| self.header[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
                .collect(),
            timing: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| GoatError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_timing_columns() {
        let mut t = Table::new(&["n", "err", "seconds"], &["seconds"]);
        t.push(vec!["10".into(), "1e-3".into(), "0.5".into()]);
        assert_eq!(t.to_csv_string(), "n,err,seconds\n10,1e-3,0.5\n");
        let stripped = t.without_timing();
        assert_eq!(stripped.header, vec!["n", "err"]);
        assert_eq!(t.floats("err"), vec![1e-3]);
    }
}
