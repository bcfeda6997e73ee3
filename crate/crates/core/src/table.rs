//! Delimited text tables.
//!
//! Input delimiter is detected from the header line (tab if present, else
//! comma). Output is always tab-separated, with numbers printed to 12
//! significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RawTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    /// Data rows with their 1-based line numbers in the source file.
    pub rows: Vec<(usize, Vec<String>)>,
}

impl RawTable {
    pub fn parse_err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Parse a cell as a finite real number. Empty cells and `NA` are rejected.
    pub fn number(&self, line: usize, col: usize, cell: &str) -> Result<f64> {
        let trimmed = cell.trim();
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.parse_err(
                line,
                format!(
                    "non-numeric value {:?} at column {} ({})",
                    trimmed,
                    col + 1,
                    self.header.get(col).map(String::as_str).unwrap_or("?")
                ),
            )),
        }
    }

    /// Position of a header column, matched case-insensitively.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }
}

pub fn detect_delimiter(line: &str) -> char {
    if line.contains('\t') {
        '\t'
    } else {
        ','
    }
}

fn split_line(line: &str, delim: char) -> Vec<String> {
    line.split(delim)
        .map(|c| c.trim().trim_matches('"').to_string())
        .collect()
}

pub fn read_table(path: &Path) -> Result<RawTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(path, &text)
}

pub fn parse_table(path: &Path, text: &str) -> Result<RawTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "empty table, header row required".into(),
    })?;
    let delim = detect_delimiter(header_line);
    let header = split_line(header_line, delim);
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let cells = split_line(line, delim);
        if cells.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!(
                    "ragged row: expected {} fields, found {}",
                    header.len(),
                    cells.len()
                ),
            });
        }
        rows.push((lineno, cells));
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

/// Format a number with 12 significant digits, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(s)
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// Accumulates a tab-separated table in memory.
#[derive(Debug, Default)]
pub struct TableWriter {
    buf: String,
}

impl TableWriter {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = TableWriter::default();
        w.row(header);
        w
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push('\t');
            }
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
    }

    /// A row made of a leading label followed by numbers.
    pub fn labeled_row(&mut self, label: &str, values: impl IntoIterator<Item = f64>) {
        self.buf.push_str(label);
        for v in values {
            let _ = write!(self.buf, "\t{}", fmt_num(v));
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        fs::write(path, &self.buf).map_err(|e| Error::io(path, e))
    }
}

pub fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '1' => Some(true),
            '0' => Some(false),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(250.0), "250");
        assert_eq!(fmt_num(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt_num(123456789.123456789), "123456789.123");
        assert_eq!(fmt_num(-1.3407807929942596e154), "-1.34078079299e154");
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse_table(Path::new("t.csv"), "id,a,b\ns1,1,2\ns2,3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delimiter_detection() {
        let t = parse_table(Path::new("t"), "id\ta\tb\ns1\t1\t2\n").unwrap();
        assert_eq!(t.header, vec!["id", "a", "b"]);
        let t = parse_table(Path::new("t"), "id,a,b\ns1,1,2\n").unwrap();
        assert_eq!(t.rows[0].1, vec!["s1", "1", "2"]);
    }

    proptest! {
        #[test]
        fn twelve_digit_decimals_round_trip(mantissa in -999_999_999_999i64..999_999_999_999i64, exp in -8i32..8) {
            let x: f64 = format!("{mantissa}e{exp}").parse().unwrap();
            let printed = fmt_num(x);
            let back: f64 = printed.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits(), "{} -> {}", x, printed);
        }
    }
}
