//! Field snapshot file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic  4 bytes  "SLS1"
//! u32    version = 1
//! u32    d
//! u32×d  n per axis
//! f64×d  box length per axis
//! f64×2  (re, im) per grid point, row-major, n^d pairs
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"SLS1";
pub const VERSION: u32 = 1;

pub fn write_field<W: Write>(field: &ComplexField, mut w: W) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &n in grid.dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for &l in grid.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<ComplexField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    if d == 0 || d > crate::grid::MAX_DIM {
        return Err(Error::Snapshot(format!("dimension {d} out of range")));
    }
    let mut dims = Vec::with_capacity(d);
    for _ in 0..d {
        dims.push(read_u32(&mut r)? as usize);
    }
    let mut lengths = Vec::with_capacity(d);
    for _ in 0..d {
        lengths.push(read_f64(&mut r)?);
    }
    let grid = Grid::with_axes(&dims, &lengths)?;
    let total = grid.len();
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        values.push(Complex64::new(re, im));
    }
    ComplexField::new(grid, values)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
