//! Binary containers for matrices. All integers and floats are little-endian.
//!
//! Matrix file:
//!
//! | bytes | content                       |
//! |-------|-------------------------------|
//! | 8     | magic `MNMMATRX`              |
//! | 4     | format version (u32, `1`)     |
//! | 8     | rows (u64)                    |
//! | 8     | cols (u64)                    |
//! | 8·r·c | values (f64, row-major)       |
//!
//! Bundle file (named matrices plus a UTF-8 metadata string):
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `MNMBUNDL`                          |
//! | 4     | format version (u32, `1`)                 |
//! | 4     | metadata length in bytes (u32)            |
//! | m     | metadata (UTF-8, JSON by convention)      |
//! | 4     | tensor count (u32)                        |
//! | …     | per tensor: name length (u32), name bytes, rows (u64), cols (u64), values |

use std::io::{Read, Write};

use super::{Matrix, NumericsError};

pub const MATRIX_MAGIC: &[u8; 8] = b"MNMMATRX";
pub const BUNDLE_MAGIC: &[u8; 8] = b"MNMBUNDL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub metadata: String,
    pub tensors: Vec<(String, Matrix)>,
}

impl Bundle {
    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }
}

fn bad(msg: impl Into<String>) -> NumericsError {
    NumericsError::Checkpoint(msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NumericsError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NumericsError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn check_header<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<(), NumericsError> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(bad(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    Ok(())
}

fn write_body<W: Write>(w: &mut W, m: &Matrix) -> Result<(), NumericsError> {
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_body<R: Read>(r: &mut R) -> Result<Matrix, NumericsError> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| bad("matrix size overflows"))?;
    let mut buf = vec![0u8; n.checked_mul(8).ok_or_else(|| bad("matrix size overflows"))?];
    r.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Matrix::from_vec(rows, cols, values)
}

pub fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> Result<(), NumericsError> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_body(w, m)
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix, NumericsError> {
    check_header(r, MATRIX_MAGIC)?;
    read_body(r)
}

pub fn write_bundle<W: Write>(w: &mut W, bundle: &Bundle) -> Result<(), NumericsError> {
    w.write_all(BUNDLE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(bundle.metadata.len() as u32).to_le_bytes())?;
    w.write_all(bundle.metadata.as_bytes())?;
    w.write_all(&(bundle.tensors.len() as u32).to_le_bytes())?;
    for (name, m) in &bundle.tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        write_body(w, m)?;
    }
    Ok(())
}

pub fn read_bundle<R: Read>(r: &mut R) -> Result<Bundle, NumericsError> {
    check_header(r, BUNDLE_MAGIC)?;
    let read_string = |r: &mut R| -> Result<String, NumericsError> {
        let len = read_u32(r)? as usize;
        let mut b = vec![0u8; len];
        r.read_exact(&mut b)?;
        String::from_utf8(b).map_err(|_| bad("string is not UTF-8"))
    };
    let metadata = read_string(r)?;
    let count = read_u32(r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name = read_string(r)?;
        tensors.push((name, read_body(r)?));
    }
    Ok(Bundle { metadata, tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_header_layout_is_exact() {
        let m = Matrix::from_vec(1, 2, vec![1.0, -0.5]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 8 + 16);
        assert_eq!(&buf[..8], b"MNMMATRX");
        assert_eq!(&buf[8..12], &[1, 0, 0, 0]);
        assert_eq!(&buf[12..20], &1u64.to_le_bytes());
        assert_eq!(&buf[20..28], &2u64.to_le_bytes());
        assert_eq!(&buf[28..36], &1.0f64.to_le_bytes());
        assert_eq!(read_matrix(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn bundle_round_trip_and_bad_magic() {
        let b = Bundle {
            metadata: "{\"k\":1}".into(),
            tensors: vec![
                ("a".into(), Matrix::identity(3)),
                ("bias".into(), Matrix::from_vec(2, 1, vec![0.25, 1e-300]).unwrap()),
            ],
        };
        let mut buf = Vec::new();
        write_bundle(&mut buf, &b).unwrap();
        assert_eq!(read_bundle(&mut buf.as_slice()).unwrap(), b);
        buf[0] = b'X';
        assert!(read_bundle(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn truncated_input_is_an_error() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &Matrix::identity(2)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_matrix(&mut buf.as_slice()).is_err());
    }
}
