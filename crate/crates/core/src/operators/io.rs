//! Plain-text exchange formats: coordinate sparse matrices, PGM (P2) and CSV grids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::grid::Grid2D;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses `m n nnz` followed by `nnz` lines of one-based `i j v`.
pub fn parse_coordinate(text: &str) -> Result<SparseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%') && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(parse_err(hl, "header must be `m n nnz`"));
    }
    let parse_usize = |s: &str, line: usize| {
        s.parse::<usize>()
            .map_err(|_| parse_err(line, format!("expected integer, got `{s}`")))
    };
    let m = parse_usize(h[0], hl)?;
    let n = parse_usize(h[1], hl)?;
    let nnz = parse_usize(h[2], hl)?;
    let mut t = Vec::with_capacity(nnz);
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "entry must be `i j v`"));
        }
        let i = parse_usize(f[0], ln)?;
        let j = parse_usize(f[1], ln)?;
        let v: f64 = f[2]
            .parse()
            .map_err(|_| parse_err(ln, format!("expected real, got `{}`", f[2])))?;
        if i == 0 || j == 0 || i > m || j > n {
            return Err(parse_err(ln, format!("index ({i}, {j}) outside {m}x{n}")));
        }
        t.push((i - 1, j - 1, v));
    }
    if t.len() != nnz {
        return Err(parse_err(hl, format!("header declares {nnz} entries, found {}", t.len())));
    }
    SparseMatrix::from_triplets(m, n, t)
}

pub fn format_coordinate(a: &SparseMatrix) -> String {
    let mut s = format!("{} {} {}\n", a.rows(), a.cols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

pub fn read_coordinate(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    parse_coordinate(&fs::read_to_string(path)?)
}

pub fn write_coordinate(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    Ok(fs::write(path, format_coordinate(a))?)
}

/// Parses an ASCII PGM and normalizes intensities to `[0, 1]`.
pub fn parse_pgm(text: &str) -> Result<Grid2D> {
    let mut tokens = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(|t| (k + 1, t)));
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P2")) => {}
        Some((l, t)) => return Err(parse_err(l, format!("expected magic `P2`, got `{t}`"))),
        None => return Err(parse_err(1, "empty PGM")),
    }
    let mut next_num = |what: &str| -> Result<(usize, f64)> {
        let (l, t) = it.next().ok_or_else(|| parse_err(0, format!("missing {what}")))?;
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(l, format!("bad {what} `{t}`")))?;
        Ok((l, v))
    };
    let (_, w) = next_num("width")?;
    let (_, h) = next_num("height")?;
    let (ml, maxval) = next_num("maxval")?;
    if maxval <= 0.0 {
        return Err(parse_err(ml, "maxval must be positive"));
    }
    let (rows, cols) = (h as usize, w as usize);
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let (l, v) = next_num("pixel")?;
        if v < 0.0 || v > maxval {
            return Err(parse_err(l, format!("pixel {v} outside [0, {maxval}]")));
        }
        values.push(v / maxval);
    }
    Grid2D::new(rows, cols, values)
}

/// 8-bit ASCII PGM; values are clamped to `[0, 1]` before quantization.
pub fn format_pgm(g: &Grid2D) -> String {
    let mut s = format!("P2\n{} {}\n255\n", g.cols(), g.rows());
    for i in 0..g.rows() {
        let row: Vec<String> = (0..g.cols())
            .map(|j| ((g.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Grid2D> {
    parse_pgm(&fs::read_to_string(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, g: &Grid2D) -> Result<()> {
    Ok(fs::write(path, format_pgm(g))?)
}

/// One grid row per line, comma separated, shortest round-trip formatting.
pub fn format_csv(g: &Grid2D) -> String {
    let mut s = String::new();
    for i in 0..g.rows() {
        let row: Vec<String> = (0..g.cols()).map(|j| format!("{}", g.get(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Grid2D> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(k + 1, format!("bad value `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "empty CSV grid"));
    }
    Grid2D::from_rows(&rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Grid2D> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn write_csv(path: impl AsRef<Path>, g: &Grid2D) -> Result<()> {
    Ok(fs::write(path, format_csv(g))?)
}

/// Loads a grid by extension: `.pgm` or anything else as CSV.
pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid2D> {
    let p = path.as_ref();
    match p.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => read_pgm(p),
        _ => read_csv(p),
    }
}
