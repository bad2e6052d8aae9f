//! Machine-readable output: CSV tables with a fixed numeric format so
//! identical runs produce byte-identical artifacts.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Formats with 6 significant digits, switching to scientific notation
/// beyond 1e±4.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    let a = x.abs();
    if !(1e-4..1e4).contains(&a) {
        format!("{x:.5e}")
    } else {
        let digits_before = a.log10().floor() as i32 + 1;
        let decimals = (6 - digits_before).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// A column-ordered result table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| (*s).to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Renders the table to stdout-friendly aligned text.
    pub fn to_pretty(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut s = String::new();
        let fmt_row = |cells: &[String], widths: &[usize]| -> String {
            cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        s.push_str(&fmt_row(&self.columns, &widths));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&fmt_row(row, &widths));
            s.push('\n');
        }
        s
    }
}

/// Writes the table as CSV to the given path.
pub fn emit_table(table: &Table, path: &Path) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    table
        .write_csv(&mut file)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_number(0.0), "0.00000");
        assert_eq!(format_number(1.0), "1.00000");
        assert_eq!(format_number(2.8284271), "2.82843");
        assert_eq!(format_number(44.937), "44.9370");
        assert_eq!(format_number(9999.96), "9999.96");
        assert_eq!(format_number(0.000146446), "0.000146446");
    }

    #[test]
    fn scientific_beyond_1e4() {
        assert_eq!(format_number(6.6713e6), "6.67130e6");
        assert_eq!(format_number(1e4), "1.00000e4");
        assert_eq!(format_number(4.6788e-3), "0.00467880");
        assert_eq!(format_number(5e-12), "5.00000e-12");
        assert_eq!(format_number(-5e-12), "-5.00000e-12");
    }

    #[test]
    fn csv_header_only_when_empty() {
        let t = Table::new(&["V", "S", "QBER"]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "V,S,QBER\n");
    }

    #[test]
    fn csv_rows_newline_terminated() {
        let mut t = Table::new(&["a", "b"]);
        t.push_row(vec!["1".into(), "2".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,2\n");
    }
}
