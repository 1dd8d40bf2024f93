//! Surface dumps.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "HJBQVS1\0"
//! n_steps    u64
//! dt         f64
//! q_min      i64
//! q_max      i64
//! lbar       u32
//! stride     u32
//! n_dumped   u64
//! n_dumped blocks of:
//!   level    u64
//!   values   (q_max - q_min + 1) * (lbar + 1) f64, q-major, l fastest
//! ```
//!
//! Levels `0, stride, 2 * stride, ...` are written, plus the terminal level.

use std::io::{self, Read, Write};

use super::{SolverGrid, ValueSurface};

const MAGIC: &[u8; 8] = b"HJBQVS1\0";

/// Levels selected for a strided dump.
pub fn dumped_levels(grid: &SolverGrid, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut levels: Vec<usize> = (0..=grid.n_steps).step_by(stride).collect();
    if levels.last() != Some(&grid.n_steps) {
        levels.push(grid.n_steps);
    }
    levels
}

impl ValueSurface {
    pub fn write_binary<W: Write>(&self, mut w: W, stride: usize) -> io::Result<()> {
        let g = &self.grid;
        let levels = dumped_levels(g, stride);
        w.write_all(MAGIC)?;
        w.write_all(&(g.n_steps as u64).to_le_bytes())?;
        w.write_all(&g.dt.to_le_bytes())?;
        w.write_all(&g.q_min.to_le_bytes())?;
        w.write_all(&g.q_max.to_le_bytes())?;
        w.write_all(&g.lbar.to_le_bytes())?;
        w.write_all(&(stride.max(1) as u32).to_le_bytes())?;
        w.write_all(&(levels.len() as u64).to_le_bytes())?;
        for level in levels {
            w.write_all(&(level as u64).to_le_bytes())?;
            for v in self.level_values(level) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// One row per node of the given levels: `t_level,t_seconds,q,l,h`.
    pub fn write_csv<W: Write>(&self, mut w: W, levels: &[usize]) -> io::Result<()> {
        let g = &self.grid;
        writeln!(w, "t_level,t_seconds,q,l,h")?;
        for &level in levels {
            let values = self.level_values(level);
            for qi in 0..g.n_q() {
                for li in 0..g.n_l() {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        level,
                        g.time_of(level),
                        g.q_at(qi),
                        li,
                        values[qi * g.n_l() + li]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Contents of a binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDump {
    pub n_steps: usize,
    pub dt: f64,
    pub q_min: i64,
    pub q_max: i64,
    pub lbar: u32,
    pub stride: u32,
    pub levels: Vec<(usize, Vec<f64>)>,
}

impl SurfaceDump {
    pub fn h(&self, level: usize, q: i64, l: u32) -> Option<f64> {
        let (_, values) = self.levels.iter().find(|(k, _)| *k == level)?;
        if !(self.q_min..=self.q_max).contains(&q) || l > self.lbar {
            return None;
        }
        let qi = (q - self.q_min) as usize;
        values.get(qi * (self.lbar as usize + 1) + l as usize).copied()
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut r: R) -> io::Result<SurfaceDump> {
    let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(invalid("not a surface dump"));
    }
    let n_steps = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let dt = f64::from_le_bytes(read_array(&mut r)?);
    let q_min = i64::from_le_bytes(read_array(&mut r)?);
    let q_max = i64::from_le_bytes(read_array(&mut r)?);
    let lbar = u32::from_le_bytes(read_array(&mut r)?);
    let stride = u32::from_le_bytes(read_array(&mut r)?);
    let n_dumped = u64::from_le_bytes(read_array(&mut r)?) as usize;
    if q_max < q_min {
        return Err(invalid("inverted inventory bounds"));
    }
    let per_level = (q_max - q_min + 1) as usize * (lbar as usize + 1);
    let mut levels = Vec::with_capacity(n_dumped.min(1 << 20));
    for _ in 0..n_dumped {
        let level = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut values = Vec::with_capacity(per_level);
        for _ in 0..per_level {
            values.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        levels.push((level, values));
    }
    Ok(SurfaceDump {
        n_steps,
        dt,
        q_min,
        q_max,
        lbar,
        stride,
        levels,
    })
}
