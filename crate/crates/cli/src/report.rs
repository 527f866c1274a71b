//! CSV tables.

use std::io::Write;
use std::path::Path;

/// Columns shared by the bounds, oracle and certificate reports.
pub const BOUND_COLUMNS: [&str; 13] =
    ["config_id", "family", "cost", "r", "delta", "E", "L", "U", "L_lower", "oracle_value", "gap", "radius", "runtime_ms"];

/// Floats with 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    /// Appends a row given as `(column, value)` pairs; other cells stay empty.
    pub fn push(&mut self, cells: &[(&str, String)]) {
        let mut row = vec![String::new(); self.header.len()];
        for (name, value) in cells {
            let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = value.clone();
        }
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f)).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, f64::MIN_POSITIVE, 123456789.12345679] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(f64::INFINITY), "inf");
    }

    #[test]
    fn rows_fill_named_columns() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(&[("c", "3".into()), ("a", "1".into())]);
        assert_eq!(t.rows[0], vec!["1", "", "3"]);
    }
}
