//! Matrix Market coordinate I/O.
//!
//! Files use the `%%MatrixMarket matrix coordinate real general` header,
//! 1-based indices, and one `row col value` triple per line. Values are
//! written with Rust's shortest round-trip formatting, so a write/read
//! cycle reproduces every stored coefficient bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Coordinate-form matrix as read back from a file. Entries keep file
/// order; indices are 0-based in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn write_coords(
    path: &Path,
    rows: usize,
    cols: usize,
    coords: &[(usize, usize, f64)],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {} {}", rows, cols, coords.len())?;
    for &(r, c, v) in coords {
        debug_assert!(r < rows && c < cols, "coordinate out of bounds");
        writeln!(out, "{} {} {}", r + 1, c + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_coords(path: &Path) -> Result<CooMatrix> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::MarketFormat("empty file".into())),
    };
    if header.trim() != HEADER {
        return Err(Error::MarketFormat(format!(
            "unsupported header {header:?}, expected {HEADER:?}"
        )));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::MarketFormat(format!(
                        "line {}: expected 'rows cols nnz', got {line:?}",
                        lineno + 1
                    )));
                }
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|_| {
                        Error::MarketFormat(format!("line {}: bad size {s:?}", lineno + 1))
                    })
                };
                let (r, c, n) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                size = Some((r, c, n));
                entries.reserve(n);
            }
            Some((rows, cols, _)) => {
                if fields.len() != 3 {
                    return Err(Error::MarketFormat(format!(
                        "line {}: expected 'row col value', got {line:?}",
                        lineno + 1
                    )));
                }
                let r: usize = fields[0].parse().map_err(|_| {
                    Error::MarketFormat(format!("line {}: bad row index", lineno + 1))
                })?;
                let c: usize = fields[1].parse().map_err(|_| {
                    Error::MarketFormat(format!("line {}: bad column index", lineno + 1))
                })?;
                let v: f64 = fields[2].parse().map_err(|_| {
                    Error::MarketFormat(format!("line {}: bad value {:?}", lineno + 1, fields[2]))
                })?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(Error::MarketFormat(format!(
                        "line {}: index ({r}, {c}) outside 1..={rows} x 1..={cols}",
                        lineno + 1
                    )));
                }
                entries.push((r - 1, c - 1, v));
            }
        }
    }

    let (rows, cols, nnz) = size.ok_or_else(|| Error::MarketFormat("missing size line".into()))?;
    if entries.len() != nnz {
        return Err(Error::MarketFormat(format!(
            "size line promises {nnz} entries, file holds {}",
            entries.len()
        )));
    }
    Ok(CooMatrix {
        rows,
        cols,
        entries,
    })
}
