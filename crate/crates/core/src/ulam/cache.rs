//! Binary cache of discretized operators keyed by (map, β, N).
//!
//! Layout (little endian): magic, version, map name, β (NaN when the map
//! has none), N, nnz, row pointers, columns, values, invariant density.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::dynamics::BaseMap;
use crate::error::{Error, Result};

use super::grid::GriddedFunction;
use super::operator::{Transfer, UlamOperator};

const MAGIC: &[u8; 8] = b"WRULAMOP";
pub const CACHE_VERSION: u32 = 1;

/// File name for the cache entry of `(base, cells)` inside `dir`.
pub fn cache_path(dir: &Path, base: &BaseMap, cells: usize) -> PathBuf {
    let beta = base.beta().map_or_else(|| "none".to_string(), |b| format!("{:016x}", b.to_bits()));
    dir.join(format!("{}-{beta}-{cells}.v{CACHE_VERSION}.bin", base.name()))
}

pub fn save(path: &Path, transfer: &Transfer) -> Result<()> {
    let op = transfer.operator();
    let (row_ptr, cols, vals) = op.csr();
    let mut buf = Vec::with_capacity(32 + 8 * (row_ptr.len() + cols.len() + vals.len() + op.cells()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    let name = op.base().name().as_bytes();
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    buf.extend_from_slice(&op.base().beta().unwrap_or(f64::NAN).to_le_bytes());
    buf.extend_from_slice(&(op.cells() as u64).to_le_bytes());
    buf.extend_from_slice(&(vals.len() as u64).to_le_bytes());
    row_ptr.iter().for_each(|&p| buf.extend_from_slice(&(p as u64).to_le_bytes()));
    cols.iter().for_each(|&c| buf.extend_from_slice(&(c as u64).to_le_bytes()));
    vals.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    transfer.density().values().iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Io("truncated operator cache".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Loads the entry for `(base, cells)`; `Ok(None)` when the file is absent
/// or was written for another key or version.
pub fn load(path: &Path, base: &BaseMap, cells: usize) -> Result<Option<Transfer>> {
    let mut bytes = Vec::new();
    match fs::File::open(path) {
        Ok(mut f) => f.read_to_end(&mut bytes)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = Reader(&bytes);
    if r.take(8)? != MAGIC || r.u32()? != CACHE_VERSION {
        return Ok(None);
    }
    let len = r.u32()? as usize;
    let name = r.take(len)?.to_vec();
    let beta = r.f64()?;
    let stored_cells = r.u64()? as usize;
    let same_beta = match base.beta() {
        Some(b) => b.to_bits() == beta.to_bits(),
        None => beta.is_nan(),
    };
    if name != base.name().as_bytes() || !same_beta || stored_cells != cells {
        return Ok(None);
    }
    let nnz = r.u64()? as usize;
    let row_ptr = (0..=cells).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let cols = (0..nnz).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let vals = (0..nnz).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let density = (0..cells).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let op = UlamOperator::from_csr(*base, cells, row_ptr, cols, vals)?;
    let (lo, hi) = op.domain();
    let density = GriddedFunction::new(lo, hi, cells, 1, density)?;
    Ok(Some(Transfer::with_density(op, density)))
}

/// Loads from `dir` or builds and stores the operator for `(base, cells)`.
pub fn load_or_build(dir: Option<&Path>, base: &BaseMap, cells: usize, density_tol: f64) -> Result<Transfer> {
    if let Some(dir) = dir {
        let path = cache_path(dir, base, cells);
        if let Some(t) = load(&path, base, cells)? {
            return Ok(t);
        }
        let t = Transfer::new(UlamOperator::build(base, cells)?, density_tol)?;
        save(&path, &t)?;
        return Ok(t);
    }
    Transfer::new(UlamOperator::build(base, cells)?, density_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_key_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let base = BaseMap::lsv(0.3).unwrap();
        let built = load_or_build(Some(dir.path()), &base, 64, 1e-12).unwrap();
        let path = cache_path(dir.path(), &base, 64);
        assert!(path.exists());
        let loaded = load(&path, &base, 64).unwrap().unwrap();
        assert_eq!(loaded, built);
        assert!(load(&path, &BaseMap::lsv(0.31).unwrap(), 64).unwrap().is_none());
        assert!(load(&path, &base, 128).unwrap().is_none());
        assert!(load(&dir.path().join("missing.bin"), &base, 64).unwrap().is_none());
    }
}
