//! Binary field snapshots.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "SGNL" | u32 version = 1 | u8 n | u8 axis count (n + 1)
//! u64 dims[axis count]      time layers first, then N per spatial axis
//! f64 spacings[axis count]  tau, then h per spatial axis
//! f64 payload[prod(dims)]   row-major, time slowest
//! ```

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"SGNL";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n: u8,
    pub dims: Vec<u64>,
    pub spacings: Vec<f64>,
}

impl SnapshotHeader {
    pub fn for_grid(grid: &Grid) -> Self {
        let n = grid.n();
        let mut dims = vec![grid.layers() as u64];
        dims.extend(std::iter::repeat_n(grid.nodes_per_axis() as u64, n));
        let mut spacings = vec![grid.tau()];
        spacings.extend(std::iter::repeat_n(grid.h(), n));
        Self {
            version: VERSION,
            n: n as u8,
            dims,
            spacings,
        }
    }

    /// Number of payload values, or an error on overflow.
    pub fn payload_len(&self) -> Result<usize> {
        self.dims
            .iter()
            .try_fold(1usize, |acc, &d| {
                usize::try_from(d).ok().and_then(|d| acc.checked_mul(d))
            })
            .filter(|&len| len.checked_mul(8).is_some())
            .ok_or_else(|| Error::Snapshot(format!("dimensions {:?} overflow", self.dims)))
    }

    /// The grid described by the header.
    pub fn grid(&self) -> Result<Grid> {
        let n = self.n as usize;
        let (layers, nodes) = (self.dims[0] as usize, self.dims[1] as usize);
        if self.dims[1..].iter().any(|&d| d != self.dims[1]) {
            return Err(Error::Snapshot(format!(
                "unequal spatial dimensions {:?}",
                &self.dims[1..]
            )));
        }
        let grid = Grid::new(n, nodes, layers.saturating_sub(1))
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let expected = Self::for_grid(&grid).spacings;
        if expected
            .iter()
            .zip(&self.spacings)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a)
        {
            return Err(Error::Snapshot(format!(
                "spacings {:?} do not match the grid on [-1, 1]^n x [-1, 0]",
                self.spacings
            )));
        }
        Ok(grid)
    }
}

pub fn encode(u: &ScalarField) -> Vec<u8> {
    let header = SnapshotHeader::for_grid(u.grid());
    let mut out = Vec::with_capacity(10 + 16 * header.dims.len() + 8 * u.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.push(header.n);
    out.push(header.dims.len() as u8);
    for d in &header.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for s in &header.spacings {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Snapshot(format!(
                    "truncated while reading {what}: need {len} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn decode_header(r: &mut Reader) -> Result<SnapshotHeader> {
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Snapshot("bad magic, not an SGNL snapshot".into()));
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = r.take(1, "dimension")?[0];
    let axes = r.take(1, "axis count")?[0] as usize;
    if axes != n as usize + 1 {
        return Err(Error::Snapshot(format!(
            "axis count {axes} does not match n = {n}"
        )));
    }
    let dims = (0..axes)
        .map(|_| r.u64("dims"))
        .collect::<Result<Vec<_>>>()?;
    let spacings = (0..axes)
        .map(|_| r.f64("spacings"))
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotHeader {
        version,
        n,
        dims,
        spacings,
    })
}

pub fn decode(bytes: &[u8]) -> Result<ScalarField> {
    let mut r = Reader { bytes, pos: 0 };
    let header = decode_header(&mut r)?;
    let len = header.payload_len()?;
    let grid = header.grid()?;
    let payload = r.take(len * 8, "payload")?;
    if r.pos != bytes.len() {
        return Err(Error::Snapshot(format!(
            "{} trailing bytes after the payload",
            bytes.len() - r.pos
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(grid, values)
}

pub fn write(path: &Path, u: &ScalarField) -> Result<()> {
    std::fs::write(path, encode(u))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<ScalarField> {
    decode(&std::fs::read(path)?)
}

/// Reads only the header.
pub fn read_header(path: &Path) -> Result<SnapshotHeader> {
    let bytes = std::fs::read(path)?;
    decode_header(&mut Reader {
        bytes: &bytes,
        pos: 0,
    })
}
