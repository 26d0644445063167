//! Binary field snapshots.
//!
//! Layout: the magic `RCS1`, the grid dimensions as three little-endian `u32`,
//! the field name as a little-endian `u32` byte length followed by UTF-8, then
//! the samples as little-endian `f64` in row-major `(x, y, z)` order.

use std::io::{Read, Write};

use super::{Grid, PhysicalField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RCS1";

pub fn write_snapshot<W: Write>(mut w: W, name: &str, field: &PhysicalField) -> Result<()> {
    w.write_all(MAGIC)?;
    for n in field.grid().dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(String, PhysicalField)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadSnapshot(format!("bad magic {magic:?}")));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let nz = read_u32(&mut r)? as usize;
    let grid = Grid::new(nx, ny, nz)?;
    let len = read_u32(&mut r)? as usize;
    let mut name = vec![0u8; len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|e| Error::BadSnapshot(e.to_string()))?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((name, PhysicalField::new(grid, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid::new(4, 6, 8).unwrap();
        let f = PhysicalField::from_fn(g, |x, y, z| x + 2.0 * y - z);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, "theta", &f).unwrap();
        assert_eq!(&buf[..4], b"RCS1");
        assert_eq!(&buf[4..16], &[4, 0, 0, 0, 6, 0, 0, 0, 8, 0, 0, 0]);
        assert_eq!(&buf[16..20], &[5, 0, 0, 0]);
        assert_eq!(&buf[20..25], b"theta");
        assert_eq!(buf.len(), 25 + 8 * g.len());
        let (name, back) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(name, "theta");
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_bad_magic() {
        let err = read_snapshot(&b"XXXX\0\0\0\0"[..]).unwrap_err();
        assert!(matches!(err, Error::BadSnapshot(_)));
    }
}
