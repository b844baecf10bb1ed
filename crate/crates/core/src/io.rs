//! Field serialization: `#`-headed CSV, a compact binary dump and PGM previews.
//!
//! CSV layout: free `#` header lines, then `# grid n1=<n1> n2=<n2>`, then `n1`
//! data lines of `n2` comma-separated values (row-major, line `i1`).

use crate::error::{Error, Result};
use crate::fields::{Grid, PhaseField, ScalarField};

const MAGIC: &[u8; 4] = b"MPF1";

fn write_header(out: &mut String, header: &[String], grid: Grid) {
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    out.push_str(&format!("# grid n1={} n2={}\n", grid.n1, grid.n2));
}

fn write_rows<T: std::fmt::Display>(out: &mut String, grid: Grid, values: &[T]) {
    for row in values.chunks(grid.n2) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
}

pub fn phase_to_csv(p: &PhaseField, header: &[String]) -> String {
    let mut out = String::new();
    write_header(&mut out, header, p.grid);
    write_rows(&mut out, p.grid, &p.labels);
    out
}

/// Values are written with Rust's shortest round-trip formatting.
pub fn scalar_to_csv(f: &ScalarField, header: &[String]) -> String {
    let mut out = String::new();
    write_header(&mut out, header, f.grid);
    write_rows(&mut out, f.grid, &f.values);
    out
}

/// Splits a CSV dump into free header lines (without `# `), the grid and the data tokens.
fn parse_csv(text: &str) -> Result<(Vec<String>, Grid, Vec<&str>)> {
    let mut header = Vec::new();
    let mut grid = None;
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(h) = line.strip_prefix('#') {
            let h = h.strip_prefix(' ').unwrap_or(h);
            if let Some(rest) = h.strip_prefix("grid ") {
                grid = Some(parse_grid_line(rest)?);
            } else {
                header.push(h.to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let g = grid.ok_or_else(|| Error::Parse(format!("line {}: data before the grid line", lineno + 1)))?;
        let row: Vec<&str> = line.split(',').map(str::trim).collect();
        if row.len() != g.n2 {
            return Err(Error::Parse(format!("line {}: expected {} values, got {}", lineno + 1, g.n2, row.len())));
        }
        tokens.extend(row);
    }
    let grid = grid.ok_or_else(|| Error::Parse("missing '# grid n1=.. n2=..' line".into()))?;
    if tokens.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} values, got {}", grid.len(), tokens.len())));
    }
    Ok((header, grid, tokens))
}

fn parse_grid_line(rest: &str) -> Result<Grid> {
    let mut n1 = None;
    let mut n2 = None;
    for part in rest.split_whitespace() {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("bad grid token '{part}'")))?;
        let v: usize = v.parse().map_err(|_| Error::Parse(format!("bad grid size '{v}'")))?;
        match k {
            "n1" => n1 = Some(v),
            "n2" => n2 = Some(v),
            _ => return Err(Error::Parse(format!("unknown grid key '{k}'"))),
        }
    }
    match (n1, n2) {
        (Some(a), Some(b)) => Grid::new(a, b),
        _ => Err(Error::Parse("grid line needs n1 and n2".into())),
    }
}

pub fn phase_from_csv(text: &str) -> Result<(PhaseField, Vec<String>)> {
    let (header, grid, tokens) = parse_csv(text)?;
    let labels = tokens
        .iter()
        .map(|t| t.parse::<u8>().map_err(|_| Error::Parse(format!("bad phase label '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((PhaseField::new(grid, labels)?, header))
}

pub fn scalar_from_csv(text: &str) -> Result<(ScalarField, Vec<String>)> {
    let (header, grid, tokens) = parse_csv(text)?;
    let values = tokens
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad value '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((ScalarField::new(grid, values)?, header))
}

/// `MPF1`, then `n1` and `n2` as little-endian `u64`, then one byte per label.
pub fn phase_to_bytes(p: &PhaseField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + p.labels.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(p.grid.n1 as u64).to_le_bytes());
    out.extend_from_slice(&(p.grid.n2 as u64).to_le_bytes());
    out.extend_from_slice(&p.labels);
    out
}

pub fn phase_from_bytes(bytes: &[u8]) -> Result<PhaseField> {
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(Error::Parse("not a binary phase dump".into()));
    }
    let read = |r: std::ops::Range<usize>| -> usize {
        u64::from_le_bytes(bytes[r].try_into().expect("eight bytes")) as usize
    };
    let grid = Grid::new(read(4..12), read(12..20))?;
    let labels = &bytes[20..];
    if labels.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} labels, got {}", grid.len(), labels.len())));
    }
    PhaseField::new(grid, labels.to_vec())
}

/// Binary PGM (P5): image column `i1`, image row `n2 - 1 - i2`; labels 1..4 map to 0, 85, 170, 255.
/// Header lines become `#` comments after the magic number.
pub fn phase_to_pgm(p: &PhaseField, header: &[String]) -> Vec<u8> {
    let Grid { n1, n2 } = p.grid;
    let mut head = String::from("P5\n");
    for h in header {
        head.push_str("# ");
        head.push_str(h);
        head.push('\n');
    }
    head.push_str(&format!("{n1} {n2}\n255\n"));
    let mut out = head.into_bytes();
    for r in 0..n2 {
        let i2 = n2 - 1 - r;
        out.extend((0..n1).map(|i1| (p.at(i1, i2) - 1) * 85));
    }
    out
}
