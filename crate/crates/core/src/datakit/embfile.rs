//! `EMB1` binary embedding container.
//!
//! Layout, all little endian:
//!
//! ```text
//! magic   4 bytes  "EMB1"
//! count   u32
//! dim     u32
//! record  u16 id-length, id bytes (UTF-8), dim * f32 values
//! ```
//!
//! Values are stored as f32 (the one place the engine down-converts from
//! f64). Readers reject trailing bytes and report the byte offset of any
//! malformation. The same container holds vision features, with several
//! rows per image keyed `id#token-k`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::matrix::Matrix;

const MAGIC: &[u8; 4] = b"EMB1";

pub fn write_embeddings(path: &Path, ids: &[String], matrix: &Matrix) -> Result<()> {
    assert_eq!(ids.len(), matrix.rows(), "id count must match rows");
    let mut buf = Vec::with_capacity(12 + matrix.rows() * (2 + 8 + matrix.cols() * 4));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&u32::try_from(ids.len()).expect("row count").to_le_bytes());
    buf.extend_from_slice(&u32::try_from(matrix.cols()).expect("dim").to_le_bytes());
    for (id, row) in ids.iter().zip(matrix.iter_rows()) {
        let id_bytes = id.as_bytes();
        let len = u16::try_from(id_bytes.len())
            .map_err(|_| Error::Config(format!("id too long: {id}")))?;
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(id_bytes);
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let bytes = fs::read(path)?;
    let mut r = Reader::new(&bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(r.error_at(0, "bad magic (expected EMB1)"));
    }
    let count = r.u32("count")? as usize;
    let dim = r.u32("dim")? as usize;
    // No preallocation from header fields: a corrupt count/dim must fail
    // with a FormatError at the truncation point, not an allocation bomb.
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for _ in 0..count {
        let id_len = r.u16("id length")? as usize;
        let id_bytes = r.take(id_len, "id")?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| r.error_at(r.pos as u64 - id_len as u64, "id is not UTF-8"))?;
        ids.push(id.to_string());
        for _ in 0..dim {
            let at = r.pos as u64;
            let v = r.f32("value")?;
            if !v.is_finite() {
                return Err(r.error_at(at, "non-finite value"));
            }
            data.push(f64::from(v));
        }
    }
    if r.pos != bytes.len() {
        return Err(r.error_at(r.pos as u64, "trailing bytes"));
    }
    Ok((ids, Matrix::from_vec(count, dim, data)))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn error_at(&self, offset: u64, msg: &str) -> Error {
        Error::FormatError {
            offset,
            msg: msg.to_string(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.error_at(self.pos as u64, &format!("truncated {what}")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
