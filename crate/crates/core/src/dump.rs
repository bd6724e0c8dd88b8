//! Plain-text field dumps: a JSON header line followed by
//! `index,x,y,re,im` rows, one per node.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, DomainKind, Field, Grid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub kind: DomainKind,
    pub resolution: usize,
    pub nodes: usize,
}

pub fn format_field(field: &ComplexField) -> String {
    let grid = field.grid();
    let header = DumpHeader {
        kind: grid.kind(),
        resolution: grid.resolution(),
        nodes: grid.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str("index,x,y,re,im\n");
    for (i, (z, [x, y])) in field.values().iter().zip(grid.coords()).enumerate() {
        writeln!(out, "{i},{x},{y},{},{}", z.re, z.im).expect("writing to a String");
    }
    out
}

pub fn write_field(path: &Path, field: &ComplexField) -> Result<()> {
    std::fs::write(path, format_field(field))?;
    Ok(())
}

/// Parses a dump and checks it against `grid`.
pub fn parse_field(text: &str, grid: &Arc<Grid>) -> Result<ComplexField> {
    let mut lines = text.lines();
    let header: DumpHeader = serde_json::from_str(lines.next().unwrap_or_default())
        .map_err(|e| Error::Format(format!("field dump header: {e}")))?;
    if header.kind != grid.kind() || header.resolution != grid.resolution() || header.nodes != grid.len() {
        return Err(Error::GridMismatch);
    }
    if lines.next() != Some("index,x,y,re,im") {
        return Err(Error::Format("field dump: missing column line".into()));
    }
    let mut values = vec![Complex64::default(); grid.len()];
    let mut seen = vec![false; grid.len()];
    for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Error::Format(format!("field dump line {}: {line:?}", lineno + 3));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad());
        }
        let index: usize = cols[0].trim().parse().map_err(|_| bad())?;
        let re: f64 = cols[3].trim().parse().map_err(|_| bad())?;
        let im: f64 = cols[4].trim().parse().map_err(|_| bad())?;
        if index >= grid.len() || seen[index] {
            return Err(bad());
        }
        seen[index] = true;
        values[index] = Complex64::new(re, im);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("field dump: node {missing} missing")));
    }
    Field::from_values(grid, values)
}

pub fn read_field(path: &Path, grid: &Arc<Grid>) -> Result<ComplexField> {
    parse_field(&std::fs::read_to_string(path)?, grid)
}
