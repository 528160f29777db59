//! Matrix Market coordinate format (`real`, `symmetric` or `general`).
//!
//! Indices are 1-based on disk and 0-based in memory. Values are written
//! with 17 significant digits so that a write/read cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{GeneralMatrix, HermMatrix};

/// A matrix read from a Matrix Market file.
#[derive(Clone, Debug)]
pub enum MarketMatrix {
    Symmetric(HermMatrix),
    General(GeneralMatrix),
}

impl MarketMatrix {
    pub fn rows(&self) -> usize {
        match self {
            MarketMatrix::Symmetric(h) => h.n(),
            MarketMatrix::General(g) => g.rows(),
        }
    }

    pub fn into_general(self) -> GeneralMatrix {
        match self {
            MarketMatrix::Symmetric(h) => h.to_general(),
            MarketMatrix::General(g) => g,
        }
    }
}

/// Format a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market(path: &Path) -> Result<MarketMatrix> {
    parse_matrix_market(File::open(path)?, path)
}

/// Parse from any reader; `origin` is used in error messages only.
pub fn parse_matrix_market(reader: impl Read, origin: &Path) -> Result<MarketMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    let header = header?;
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() < 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" || toks[2] != "coordinate" {
        return Err(parse_err(origin, 1, format!("unsupported header `{header}`")));
    }
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(parse_err(origin, 1, format!("unsupported field `{}`", toks[3])));
    }
    let symmetric = match toks[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(origin, 1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(parse_err(origin, ln + 1, "expected `rows cols nnz`"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(origin, ln + 1, e.to_string()));
                size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
                entries.reserve(size.unwrap().2);
            }
            Some((r, c, _)) => {
                if f.len() != 3 {
                    return Err(parse_err(origin, ln + 1, "expected `row col value`"));
                }
                let i: usize = f[0].parse().map_err(|_| parse_err(origin, ln + 1, "bad row index"))?;
                let j: usize = f[1].parse().map_err(|_| parse_err(origin, ln + 1, "bad column index"))?;
                let v: f64 = f[2].parse().map_err(|_| parse_err(origin, ln + 1, "bad value"))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(parse_err(origin, ln + 1, format!("index ({i},{j}) outside {r}x{c}")));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(origin, 1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            origin,
            0,
            format!("declared {nnz} entries but found {}", entries.len()),
        ));
    }
    if symmetric {
        if rows != cols {
            return Err(parse_err(origin, 1, "symmetric matrix must be square"));
        }
        Ok(MarketMatrix::Symmetric(HermMatrix::from_triplets(rows, entries)))
    } else {
        Ok(MarketMatrix::General(GeneralMatrix::from_triplets(rows, cols, entries)))
    }
}

/// Write a symmetric matrix; entries are emitted on or below the diagonal.
pub fn write_symmetric(mut w: impl Write, h: &HermMatrix) -> Result<()> {
    let mut entries: Vec<(usize, usize, f64)> = h.iter_upper().map(|(i, j, v)| (j, i, v)).collect();
    entries.sort_by_key(|&(i, j, _)| (j, i));
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", h.n(), h.n(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
    }
    Ok(())
}

pub fn write_general(mut w: impl Write, g: &GeneralMatrix) -> Result<()> {
    let mut entries: Vec<(usize, usize, f64)> = g.iter().collect();
    entries.sort_by_key(|&(i, j, _)| (j, i));
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", g.rows(), g.cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
    }
    Ok(())
}

pub fn save_symmetric(path: &Path, h: &HermMatrix) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_symmetric(&mut f, h)?;
    f.flush()?;
    Ok(())
}

pub fn save_general(path: &Path, g: &GeneralMatrix) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_general(&mut f, g)?;
    f.flush()?;
    Ok(())
}
