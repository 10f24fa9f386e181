//! Binary snapshot files.
//!
//! Layout, all little-endian:
//!
//! | offset | size      | field                      |
//! |--------|-----------|----------------------------|
//! | 0      | 4         | magic `LPS1`               |
//! | 4      | 2         | format version (`u16`)     |
//! | 6      | 4         | `nx` (`u32`)               |
//! | 10     | 4         | `ny` (`u32`)               |
//! | 14     | 8         | `beta` (`f64`)             |
//! | 22     | 8         | time (`f64`)               |
//! | 30     | 8·nx·ny   | samples, row-major         |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, PhysicalField};

pub const MAGIC: [u8; 4] = *b"LPS1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub beta: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: PhysicalField,
    pub meta: SnapshotMeta,
}

pub fn snapshot_len(nx: usize, ny: usize) -> usize {
    HEADER_LEN + 8 * nx * ny
}

pub fn encode_snapshot(field: &PhysicalField, meta: SnapshotMeta) -> Vec<u8> {
    let n = field.grid().n();
    let mut out = Vec::with_capacity(snapshot_len(n, n));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&meta.beta.to_le_bytes());
    out.extend_from_slice(&meta.time.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<const N: usize>(bytes: &[u8], offset: usize, what: &str) -> Result<[u8; N]> {
    bytes
        .get(offset..offset + N)
        .map(|b| b.try_into().unwrap())
        .ok_or_else(|| Error::data(offset, format!("truncated while reading {what}")))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let magic: [u8; 4] = take(bytes, 0, "magic")?;
    if magic != MAGIC {
        return Err(Error::data(
            0,
            format!("bad magic {magic:?}, expected \"LPS1\""),
        ));
    }
    let version = u16::from_le_bytes(take(bytes, 4, "version")?);
    if version != VERSION {
        return Err(Error::data(4, format!("unsupported version {version}")));
    }
    let nx = u32::from_le_bytes(take(bytes, 6, "nx")?) as usize;
    let ny = u32::from_le_bytes(take(bytes, 10, "ny")?) as usize;
    if nx != ny {
        return Err(Error::data(10, format!("non-square grid {nx}x{ny}")));
    }
    let grid = Grid2D::new(nx).map_err(|e| Error::data(6, e.to_string()))?;
    let beta = f64::from_le_bytes(take(bytes, 14, "beta")?);
    let time = f64::from_le_bytes(take(bytes, 22, "time")?);
    let expected = snapshot_len(nx, ny);
    if bytes.len() < expected {
        return Err(Error::data(
            bytes.len(),
            format!("truncated payload: {} of {expected} bytes", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::data(
            expected,
            format!("{} trailing bytes", bytes.len() - expected),
        ));
    }
    let mut values = Vec::with_capacity(nx * ny);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::data(
                HEADER_LEN + 8 * i,
                format!("non-finite sample {v}"),
            ));
        }
        values.push(v);
    }
    Ok(Snapshot {
        field: PhysicalField::new(grid, values)?,
        meta: SnapshotMeta { beta, time },
    })
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_snapshot(field: &PhysicalField, meta: SnapshotMeta, path: &Path) -> Result<()> {
    write_atomic(path, &encode_snapshot(field, meta))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: usize) -> PhysicalField {
        PhysicalField::from_fn(Grid2D::new(n).unwrap(), |x1, x2| {
            (x1 + 0.3).sin() * (2.0 * x2).cos() / 3.0
        })
    }

    fn offset_of(e: Error) -> usize {
        match e {
            Error::Data { offset, .. } => offset,
            other => panic!("expected data error, got {other}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = field(16);
        let meta = SnapshotMeta {
            beta: 1.5,
            time: 0.1 + 0.2,
        };
        let bytes = encode_snapshot(&f, meta);
        assert_eq!(bytes.len(), 30 + 8 * 16 * 16);
        let back = decode_snapshot(&bytes).unwrap();
        assert_eq!(back.meta, meta);
        for (a, b) in back.field.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_fields_sit_at_documented_offsets() {
        let bytes = encode_snapshot(
            &field(8),
            SnapshotMeta {
                beta: 0.5,
                time: 2.0,
            },
        );
        assert_eq!(&bytes[0..4], b"LPS1");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[14..22].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[22..30].try_into().unwrap()), 2.0);
    }

    #[test]
    fn corrupt_files_name_the_offset() {
        let good = encode_snapshot(
            &field(8),
            SnapshotMeta {
                beta: 1.0,
                time: 0.0,
            },
        );
        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert_eq!(offset_of(decode_snapshot(&bad).unwrap_err()), 0);
        let mut bad = good.clone();
        bad[4] = 9;
        assert_eq!(offset_of(decode_snapshot(&bad).unwrap_err()), 4);
        assert_eq!(offset_of(decode_snapshot(&good[..100]).unwrap_err()), 100);
        assert_eq!(offset_of(decode_snapshot(&good[..12]).unwrap_err()), 10);
        let mut bad = good.clone();
        bad[HEADER_LEN + 16..HEADER_LEN + 24].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(
            offset_of(decode_snapshot(&bad).unwrap_err()),
            HEADER_LEN + 16
        );
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.lps");
        write_snapshot(
            &field(8),
            SnapshotMeta {
                beta: 1.0,
                time: 0.5,
            },
            &path,
        )
        .unwrap();
        write_snapshot(
            &field(16),
            SnapshotMeta {
                beta: 1.0,
                time: 1.5,
            },
            &path,
        )
        .unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.field.grid().n(), 16);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
