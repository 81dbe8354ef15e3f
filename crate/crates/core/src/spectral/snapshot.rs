//! Binary field snapshots.
//!
//! Layout (all little-endian): 8-byte magic `NEMSNAP\0`, then `u32` version,
//! `u32` dim, `u32` n, `u32` component count, `f64` time, followed by the
//! samples component by component, each component row-major, as `f64`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::field::{Field, Shape};
use super::grid::SpectralGrid;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"NEMSNAP\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: u32,
    pub n: u32,
    pub ncomp: u32,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn sample_count(&self) -> usize {
        (self.n as usize).pow(self.dim) * self.ncomp as usize
    }
}

pub fn write_snapshot(w: &mut impl Write, field: &Field, time: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(&MAGIC)?;
    for v in [VERSION, g.dim() as u32, g.n() as u32, field.ncomp() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.data().len() * 8);
    for v in field.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_header(r: &mut impl Read) -> Result<SnapshotHeader> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head).map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    if head[..8] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let header = SnapshotHeader {
        version: word(0),
        dim: word(1),
        n: word(2),
        ncomp: word(3),
        time: f64::from_le_bytes(head[24..32].try_into().unwrap()),
    };
    if header.version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", header.version)));
    }
    Ok(header)
}

/// Reads a snapshot onto `grid`, which must match the stored dimension and
/// resolution. Returns the field and its time stamp.
pub fn read_snapshot(r: &mut impl Read, grid: &Arc<SpectralGrid>) -> Result<(Field, f64)> {
    let header = read_header(r)?;
    if header.dim as usize != grid.dim() || header.n as usize != grid.n() {
        return Err(Error::Snapshot(format!(
            "snapshot is {}-d with n = {}, grid is {}-d with n = {}",
            header.dim,
            header.n,
            grid.dim(),
            grid.n()
        )));
    }
    let count = header.sample_count();
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(|e| Error::Snapshot(format!("truncated data: {e}")))?;
    let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let shape = if header.ncomp == 1 { Shape::Scalar } else { Shape::Vector(header.ncomp as usize) };
    let field = Field::from_samples(grid, shape, data)
        .map_err(|e| Error::Snapshot(format!("invalid samples: {e}")))?;
    Ok((field, header.time))
}

pub fn save(path: &Path, field: &Field, time: f64) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut f, field, time)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path, grid: &Arc<SpectralGrid>) -> Result<(Field, f64)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_snapshot(&mut f, grid)
}

pub fn load_header(path: &Path) -> Result<SnapshotHeader> {
    let mut f = std::fs::File::open(path)?;
    read_header(&mut f)
}
