//! Deterministic CSV output: fixed column order, nine significant digits.

use std::io::Write;
use std::path::Path;

use twpac::{Error, Result};

/// One output cell: a number (formatted to 9 significant digits) or text.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.8e}")
    }
}

/// Write rows under a header; refuses to create a file for no records.
pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config(format!(
            "no records to write to {}",
            path.display()
        )));
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => fmt_num(*v),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}
