//! Field snapshot files.
//!
//! Layout (documented byte-exactly so other tools can read it):
//!
//! ```text
//! QPFIELD 1\n                    ASCII magic + format version
//! nx=<usize>\n                   grid sizes
//! ny=<usize>\n
//! lx=<f64>\n                     extents and offsets, 17 significant digits
//! ly=<f64>\n
//! x_offset=<f64>\n
//! y_offset=<f64>\n
//! zeta=<f64>\n                   propagation coordinate of the snapshot
//! scenario=<string>\n            free-form scenario id (no newlines)
//! end\n
//! <binary>                       nx*ny complex values, little-endian f64
//!                                pairs (re, im), row-major with x fastest
//! ```

use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::field::ComplexField;
use crate::grid::{GridError, TransverseGrid};

const MAGIC: &str = "QPFIELD 1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a field snapshot (bad magic line {0:?})")]
    BadMagic(String),
    #[error("header line {0:?} is not key=value")]
    BadHeaderLine(String),
    #[error("header key {key} has unparsable value {value:?}")]
    BadValue { key: String, value: String },
    #[error("header is missing key {0}")]
    MissingKey(&'static str),
    #[error("snapshot grid is invalid: {0}")]
    Grid(#[from] GridError),
    #[error("payload truncated: expected {expected} complex values, got {got}")]
    Truncated { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub zeta: f64,
    pub scenario: String,
}

pub fn write_snapshot(
    mut w: impl Write,
    field: &ComplexField,
    zeta: f64,
    scenario: &str,
) -> Result<(), SnapshotError> {
    let g = field.grid();
    debug_assert!(!scenario.contains('\n'));
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "nx={}", g.nx())?;
    writeln!(w, "ny={}", g.ny())?;
    writeln!(w, "lx={:.16e}", g.lx())?;
    writeln!(w, "ly={:.16e}", g.ly())?;
    writeln!(w, "x_offset={:.16e}", g.x_offset())?;
    writeln!(w, "y_offset={:.16e}", g.y_offset())?;
    writeln!(w, "zeta={zeta:.16e}")?;
    writeln!(w, "scenario={scenario}")?;
    writeln!(w, "end")?;
    let mut buf = Vec::with_capacity(field.values().len() * 16);
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_line(r: &mut impl Read) -> Result<String, SnapshotError> {
    // byte-at-a-time so we never consume payload bytes
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte)?;
        if n == 0 {
            break;
        }
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(SnapshotError::BadHeaderLine(String::from_utf8_lossy(&line).into()));
        }
    }
    Ok(String::from_utf8_lossy(&line).into_owned())
}

pub fn read_snapshot(mut r: impl Read) -> Result<(ComplexField, SnapshotHeader), SnapshotError> {
    let magic = read_line(&mut r)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let mut nx = None;
    let mut ny = None;
    let mut lx = None;
    let mut ly = None;
    let mut x_offset = None;
    let mut y_offset = None;
    let mut zeta = None;
    let mut scenario = None;
    loop {
        let line = read_line(&mut r)?;
        if line == "end" {
            break;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(SnapshotError::BadHeaderLine(line));
        };
        let bad = |k: &str, v: &str| SnapshotError::BadValue { key: k.into(), value: v.into() };
        match key {
            "nx" => nx = Some(value.parse::<usize>().map_err(|_| bad(key, value))?),
            "ny" => ny = Some(value.parse::<usize>().map_err(|_| bad(key, value))?),
            "lx" => lx = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "ly" => ly = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "x_offset" => x_offset = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "y_offset" => y_offset = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "zeta" => zeta = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "scenario" => scenario = Some(value.to_string()),
            _ => return Err(SnapshotError::BadHeaderLine(line)),
        }
    }
    let grid = TransverseGrid::with_offset(
        nx.ok_or(SnapshotError::MissingKey("nx"))?,
        ny.ok_or(SnapshotError::MissingKey("ny"))?,
        lx.ok_or(SnapshotError::MissingKey("lx"))?,
        ly.ok_or(SnapshotError::MissingKey("ly"))?,
        x_offset.ok_or(SnapshotError::MissingKey("x_offset"))?,
        y_offset.ok_or(SnapshotError::MissingKey("y_offset"))?,
    )?;
    let header = SnapshotHeader {
        zeta: zeta.ok_or(SnapshotError::MissingKey("zeta"))?,
        scenario: scenario.ok_or(SnapshotError::MissingKey("scenario"))?,
    };
    let expected = grid.len();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected * 16 {
        return Err(SnapshotError::Truncated { expected, got: payload.len() / 16 });
    }
    let mut values = Vec::with_capacity(expected);
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    Ok((ComplexField::from_values(grid, values), header))
}
