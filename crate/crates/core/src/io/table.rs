//! Tab-separated text tables with `#` comment headers.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    pub fn render(&self, digits: usize) -> String {
        match self {
            Cell::Num(x) => format_float(*x, digits),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

/// Scientific notation with `digits` significant digits.
pub fn format_float(x: f64, digits: usize) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// `key = value` lines written above the column header.
    pub notes: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.notes.push((key.into(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self, digits: usize) -> String {
        let mut s = String::new();
        for (key, value) in &self.notes {
            let _ = writeln!(s, "# {key} = {}", value.render(digits));
        }
        let _ = writeln!(s, "# {}", self.columns.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render(digits)).collect();
            let _ = writeln!(s, "{}", cells.join("\t"));
        }
        s
    }
}

/// Numeric rows of a whitespace-separated table, skipping `#` lines.
pub fn read_numeric(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    parse_numeric(&text)
}

pub fn parse_numeric(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Format(format!("line {}: cannot parse {t:?}", i + 1)))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_parses_back_exactly() {
        let mut t = Table::new(&["a", "b"]);
        t.note("t", 145.0);
        let x = std::f64::consts::PI / 7.0;
        t.push(vec![x.into(), (-1e-300).into()]);
        t.push(vec![f64::NAN.into(), 3usize.into()]);
        let s = t.render(17);
        assert!(s.starts_with("# t = 1.4500000000000000e2\n# a\tb\n"));
        let rows = parse_numeric(&s).unwrap();
        assert_eq!(rows[0], vec![x, -1e-300]);
        assert!(rows[1][0].is_nan());
        assert_eq!(rows[1][1], 3.0);
    }

    #[test]
    fn digits_are_significant() {
        assert_eq!(format_float(1234.5, 3), "1.23e3");
        assert_eq!(format_float(0.5, 1), "5e-1");
    }

    #[test]
    fn reports_bad_tokens() {
        assert!(matches!(parse_numeric("1 2\n3 x\n"), Err(Error::Format(_))));
    }
}
