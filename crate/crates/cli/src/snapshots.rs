//! The `snapshots.bin` format.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        5 bytes  "SWPV1"
//! version      u32      1
//! J            u64      radial nodes
//! r_max        f64
//! h            f64      radial spacing, nodes at (j + 1/2) h
//! L_max        u32
//! n_modes      u32      (L_max + 1)²
//! n_snapshots  u64
//! then per snapshot:
//!   step       u64
//!   t          f64
//!   u          n_modes × J f64, mode-major: mode (l, k) at index l² + l + k
//!   u_t        n_modes × J f64, same layout
//! ```

use std::io::{Read, Write};
use std::path::Path;

use swpv_core::grids::RadialGrid;
use swpv_core::harmonics::{mode_count, ModeField};
use swpv_core::radial::{Snapshot, Trajectory};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 5] = b"SWPV1";
pub const VERSION: u32 = 1;

/// One decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSnapshot {
    pub step: u64,
    pub t: f64,
    pub u: ModeField,
    pub ut: ModeField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub j: u64,
    pub r_max: f64,
    pub h: f64,
    pub l_max: u32,
    pub n_modes: u32,
    pub snapshots: Vec<StoredSnapshot>,
}

/// Up to `count` snapshots of the trajectory at evenly spaced recorded
/// indices, always including the first and the last.
pub fn select_snapshots(traj: &Trajectory, count: usize) -> Vec<&Snapshot> {
    let n = traj.snapshots.len();
    if n <= count {
        return traj.snapshots.iter().collect();
    }
    let mut picked: Vec<usize> = (0..count).map(|i| i * (n - 1) / (count - 1)).collect();
    picked.dedup();
    picked.into_iter().map(|i| &traj.snapshots[i]).collect()
}

pub fn encode(grid: &RadialGrid, l_max: usize, snapshots: &[&Snapshot]) -> Vec<u8> {
    let n_modes = mode_count(l_max);
    let mut out = Vec::with_capacity(48 + snapshots.len() * (16 + 16 * n_modes * grid.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    out.extend_from_slice(&grid.r_max().to_le_bytes());
    out.extend_from_slice(&grid.spacing().to_le_bytes());
    out.extend_from_slice(&(l_max as u32).to_le_bytes());
    out.extend_from_slice(&(n_modes as u32).to_le_bytes());
    out.extend_from_slice(&(snapshots.len() as u64).to_le_bytes());
    for s in snapshots {
        out.extend_from_slice(&(s.step as u64).to_le_bytes());
        out.extend_from_slice(&s.t.to_le_bytes());
        for field in [&s.u, &s.ut] {
            for v in field.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_snapshots(path: &Path, grid: &RadialGrid, l_max: usize, snapshots: &[&Snapshot]) -> Result<()> {
    let bytes = encode(grid, l_max, snapshots);
    let mut file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| CliError::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let chunk = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        chunk.try_into().ok()
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<SnapshotFile> {
    let truncated = || CliError::schema(path, "file is truncated");
    let mut c = Cursor { bytes, pos: 0 };
    if c.take::<5>().as_ref() != Some(MAGIC) {
        return Err(CliError::schema(path, "missing SWPV1 magic"));
    }
    let version = c.u32().ok_or_else(truncated)?;
    if version != VERSION {
        return Err(CliError::schema(path, format!("unsupported version {version}")));
    }
    let j = c.u64().ok_or_else(truncated)?;
    let r_max = c.f64().ok_or_else(truncated)?;
    let h = c.f64().ok_or_else(truncated)?;
    let l_max = c.u32().ok_or_else(truncated)?;
    let n_modes = c.u32().ok_or_else(truncated)?;
    let count = c.u64().ok_or_else(truncated)?;
    if n_modes as usize != mode_count(l_max as usize) {
        return Err(CliError::schema(path, format!("{n_modes} modes do not match L_max = {l_max}")));
    }
    let len = n_modes as usize * j as usize;
    let per_snapshot = 16 + 16 * len;
    if bytes.len() != c.pos + per_snapshot * count as usize {
        return Err(CliError::schema(path, format!("size does not match {count} snapshots")));
    }
    let mut snapshots = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let step = c.u64().ok_or_else(truncated)?;
        let t = c.f64().ok_or_else(truncated)?;
        let mut read_field = || -> Result<ModeField> {
            let data = (0..len).map(|_| c.f64().ok_or_else(truncated)).collect::<Result<Vec<_>>>()?;
            Ok(ModeField::from_vec(l_max as usize, j as usize, data)?)
        };
        let u = read_field()?;
        let ut = read_field()?;
        snapshots.push(StoredSnapshot { step, t, u, ut });
    }
    Ok(SnapshotFile { j, r_max, h, l_max, n_modes, snapshots })
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}
