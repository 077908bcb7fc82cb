//! Little-endian binary container helpers shared by the model formats.

use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum BinaryError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic header (expected {expected:?})")]
    Magic { expected: String },
    #[error("unsupported container version {0}")]
    Version(u32),
    #[error("corrupt container: {0}")]
    Corrupt(String),
    #[error("bad metadata block: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) type Result<T> = std::result::Result<T, BinaryError>;

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8]) -> Result<()> {
    let mut buf = vec![0u8; magic.len()];
    r.read_exact(&mut buf)?;
    if buf != magic {
        return Err(BinaryError::Magic { expected: String::from_utf8_lossy(magic).into_owned() });
    }
    Ok(())
}

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Length-prefixed (u64) byte block.
pub(crate) fn write_block<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    write_u64(w, bytes.len() as u64)?;
    w.write_all(bytes)?;
    Ok(())
}

pub(crate) fn read_block<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let len = read_u64(r)? as usize;
    if len > 1 << 32 {
        return Err(BinaryError::Corrupt(format!("block length {len} is implausible")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// rows (u64), cols (u64), then rows*cols f64 values, row-major.
pub(crate) fn write_matrix<W: Write>(w: &mut W, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    debug_assert_eq!(rows * cols, data.len());
    write_u64(w, rows as u64)?;
    write_u64(w, cols as u64)?;
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub(crate) fn read_matrix<R: Read>(r: &mut R) -> Result<(usize, usize, Vec<f64>)> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    let n = rows
        .checked_mul(cols)
        .filter(|&n| n <= 1 << 31)
        .ok_or_else(|| BinaryError::Corrupt(format!("matrix shape {rows}x{cols} is implausible")))?;
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((rows, cols, data))
}

/// Row-major matrix stored as the rows that differ bitwise from `base`:
/// rows (u64), cols (u64), stored row count (u64), then each stored row as
/// its index (u64) followed by cols f64 values, indices ascending.
pub(crate) fn write_row_delta<W: Write>(w: &mut W, rows: usize, cols: usize, data: &[f64], base: &[f64]) -> Result<()> {
    debug_assert_eq!(rows * cols, data.len());
    debug_assert_eq!(data.len(), base.len());
    let changed: Vec<usize> = (0..rows)
        .filter(|&i| {
            let span = i * cols..(i + 1) * cols;
            data[span.clone()].iter().zip(&base[span]).any(|(a, b)| a.to_bits() != b.to_bits())
        })
        .collect();
    write_u64(w, rows as u64)?;
    write_u64(w, cols as u64)?;
    write_u64(w, changed.len() as u64)?;
    let mut bytes = Vec::with_capacity(changed.len() * (cols + 1) * 8);
    for &i in &changed {
        bytes.extend_from_slice(&(i as u64).to_le_bytes());
        for v in &data[i * cols..(i + 1) * cols] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Applies a stored delta to `base`, which must have the recorded shape.
pub(crate) fn read_row_delta<R: Read>(r: &mut R, rows: usize, cols: usize, mut base: Vec<f64>) -> Result<Vec<f64>> {
    debug_assert_eq!(rows * cols, base.len());
    let (srows, scols) = (read_u64(r)? as usize, read_u64(r)? as usize);
    if (srows, scols) != (rows, cols) {
        return Err(BinaryError::Corrupt(format!("matrix shape {srows}x{scols}, expected {rows}x{cols}")));
    }
    let stored = read_u64(r)? as usize;
    if stored > rows {
        return Err(BinaryError::Corrupt(format!("{stored} stored rows exceed {rows}")));
    }
    let mut row = vec![0u8; cols * 8];
    let mut prev: Option<usize> = None;
    for _ in 0..stored {
        let i = read_u64(r)? as usize;
        if i >= rows || prev.is_some_and(|p| p >= i) {
            return Err(BinaryError::Corrupt(format!("row index {i} out of order or range")));
        }
        prev = Some(i);
        r.read_exact(&mut row)?;
        for (dst, c) in base[i * cols..(i + 1) * cols].iter_mut().zip(row.chunks_exact(8)) {
            *dst = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let data = vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300, -3.5, 7.0];
        let mut buf = Vec::new();
        write_matrix(&mut buf, 2, 3, &data).unwrap();
        let (r, c, back) = read_matrix(&mut &buf[..]).unwrap();
        assert_eq!((r, c), (2, 3));
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn row_delta_stores_only_changed_rows() {
        let base = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut data = base.clone();
        data[3] = -0.0;
        let mut buf = Vec::new();
        write_row_delta(&mut buf, 3, 2, &data, &base).unwrap();
        assert_eq!(buf.len(), 8 * 3 + 8 + 2 * 8);
        let back = read_row_delta(&mut &buf[..], 3, 2, base.clone()).unwrap();
        assert!(data.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(read_row_delta(&mut &buf[..], 2, 3, vec![0.0; 6]).is_err());
    }

    #[test]
    fn truncated_input_errors() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, 2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_matrix(&mut &buf[..]).is_err());
    }
}
