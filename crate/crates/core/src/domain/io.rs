//! Field persistence: CSV (`r, z…, value`) and the compact `HSMF` binary dump.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use super::field::{FarField, Field};
use super::grid::Grid;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"HSMF";
pub const BINARY_VERSION: u32 = 1;

/// Writes one row per node with the node coordinates and the value.
pub fn write_csv<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    let m = g.m();
    let mut header = vec!["r".to_string()];
    if m == 1 {
        header.push("z".into());
    } else {
        header.extend((1..=m).map(|j| format!("z{j}")));
    }
    header.push("value".into());
    writeln!(out, "{}", header.join(","))?;
    let mut z = vec![0.0; m];
    for (i, v) in field.values().iter().enumerate() {
        g.z_at(i, &mut z);
        write!(out, "{:e}", g.r()[i])?;
        for zj in &z {
            write!(out, ",{zj:e}")?;
        }
        writeln!(out, ",{v:e}")?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; coordinates must match the grid nodes.
pub fn read_csv<R: Read>(grid: Arc<Grid>, input: R, far_field: FarField) -> Result<Field> {
    let reader = BufReader::new(input);
    let m = grid.m();
    let mut values = Vec::with_capacity(grid.len());
    let mut z = vec![0.0; m];
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if cols.len() != m + 2 {
            return Err(Error::Parse(format!(
                "line {}: expected {} columns, got {}",
                lineno + 1,
                m + 2,
                cols.len()
            )));
        }
        let idx = values.len();
        if idx >= grid.len() {
            return Err(Error::Parse(format!("more rows than the {} grid nodes", grid.len())));
        }
        grid.z_at(idx, &mut z);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if !close(cols[0], grid.r()[idx]) || !z.iter().zip(&cols[1..=m]).all(|(a, b)| close(*a, *b)) {
            return Err(Error::Parse(format!("line {}: coordinates do not match grid node {idx}", lineno + 1)));
        }
        values.push(cols[m + 1]);
    }
    Field::from_values(grid, values, far_field)
}

/// Writes magic, version, axis count, per-axis node counts (all `u32`) and
/// the little-endian `f64` payload.
pub fn write_binary<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let dims = field.grid().resolution();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in &dims {
        out.write_all(&(*d as u32).to_le_bytes())?;
    }
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(grid: Arc<Grid>, mut input: R, far_field: FarField) -> Result<Field> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse("missing HSMF magic bytes".into()));
    }
    let read_u32 = |input: &mut R| -> Result<u32> {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let version = read_u32(&mut input)?;
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported binary version {version}")));
    }
    let ndims = read_u32(&mut input)? as usize;
    let dims = (0..ndims)
        .map(|_| read_u32(&mut input).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    if dims != grid.resolution() {
        return Err(Error::Parse(format!(
            "dump dimensions {dims:?} do not match grid {:?}",
            grid.resolution()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut b = [0u8; 8];
    for _ in 0..grid.len() {
        input.read_exact(&mut b)?;
        values.push(f64::from_le_bytes(b));
    }
    Field::from_values(grid, values, far_field)
}
