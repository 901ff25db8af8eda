//! Recorded chain output and its two on-disk layouts.
//!
//! CSV: header `step,q_1,…,q_d,accepted`, one row per recorded state.
//!
//! Binary (little-endian): magic `MALA1` (5 bytes), `u32` dimension `d`,
//! `u64` row count `n`, then `n·d` `f64` positions in row-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::kernel::ChainStats;

pub const BINARY_MAGIC: &[u8; 5] = b"MALA1";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: u64,
    pub q: Vec<f64>,
    /// Whether the transition that produced this state was an accepted move.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub rows: Vec<TrajectoryRow>,
    pub stats: ChainStats,
}

impl Trajectory {
    pub fn csv_header(dim: usize) -> String {
        let mut h = String::from("step");
        for i in 1..=dim {
            h.push_str(&format!(",q_{i}"));
        }
        h.push_str(",accepted");
        h
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::csv_header(self.dim))?;
        for row in &self.rows {
            write!(w, "{}", row.step)?;
            for x in &row.q {
                write!(w, ",{x:e}")?;
            }
            writeln!(w, ",{}", row.accepted as u8)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let d = u32::try_from(self.dim)
            .map_err(|_| Error::InvalidInput("dimension does not fit in u32".into()))?;
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&d.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        for row in &self.rows {
            for x in &row.q {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Reads a binary dump back as `(d, rows)`.
pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::InvalidInput("bad magic; not a MALA1 dump".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            row.push(f64::from_le_bytes(b8));
        }
        rows.push(row);
    }
    Ok((d, rows))
}
