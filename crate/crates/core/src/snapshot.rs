//! Binary snapshots: `"TDHO"`, u32 version, u32 dim, u32 N, f64 L, f64 time tag, then
//! `N^dim` `(re, im)` f64 pairs in row-major order. All little-endian.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};

pub const MAGIC: &[u8; 4] = b"TDHO";
pub const VERSION: u32 = 1;

pub fn write_snapshot(psi: &WaveFunction, mut w: impl Write) -> Result<()> {
    let g = psi.grid();
    let mut buf = Vec::with_capacity(32 + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.points_per_axis() as u32).to_le_bytes());
    buf.extend_from_slice(&g.half_width().to_le_bytes());
    buf.extend_from_slice(&psi.time_tag().to_le_bytes());
    for a in psi.amplitudes() {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<WaveFunction> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(head[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let grid = Grid::new(u32_at(8) as usize, u32_at(12) as usize, f64_at(16))
        .map_err(|e| Error::Format(format!("invalid grid in header: {e}")))?;
    let time_tag = f64_at(24);
    let mut body = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut body).map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let amps = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    WaveFunction::new(grid, amps, time_tag).map_err(|e| Error::Format(e.to_string()))
}
