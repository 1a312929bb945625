//! Binary cache of a preprocessed dataset plus a JSON sidecar.
//!
//! Layout: the magic line `BSMOO-CACHE-1\n`, a little-endian `u64` header
//! length, the JSON header, then train X, train Y, test X, test Y as
//! row-major little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, RegressionData, StandardizationStats};
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"BSMOO-CACHE-1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    n_train: usize,
    n_test: usize,
    d: usize,
    q: usize,
    feature_names: Vec<String>,
    response_names: Vec<String>,
    provenance: Provenance,
}

/// Human-readable description written next to the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub q: usize,
    pub feature_names: Vec<String>,
    pub response_names: Vec<String>,
    pub stats: Option<StandardizationStats>,
    pub provenance: Provenance,
}

impl CacheSidecar {
    pub fn path_for(cache: &Path) -> PathBuf {
        cache.with_extension("json")
    }

    pub fn read(cache: &Path) -> Result<Self> {
        let text = fs::read_to_string(Self::path_for(cache))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn push_matrix(buf: &mut Vec<u8>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            buf.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
}

fn take_matrix(bytes: &[u8], pos: &mut usize, rows: usize, cols: usize, file: &Path) -> Result<DMatrix<f64>> {
    let len = rows * cols * 8;
    let chunk = bytes.get(*pos..*pos + len).ok_or_else(|| Error::Ingestion {
        file: file.to_path_buf(),
        message: "cache is truncated".into(),
    })?;
    *pos += len;
    let values: Vec<f64> = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Writes the cache atomically (temp file then rename) and its sidecar.
pub fn write_cache(path: &Path, dataset: &Dataset, stats: Option<&StandardizationStats>) -> Result<()> {
    let header = Header {
        n_train: dataset.train.num_rows(),
        n_test: dataset.test.num_rows(),
        d: dataset.train.num_features(),
        q: dataset.train.num_responses(),
        feature_names: dataset.feature_names.clone(),
        response_names: dataset.response_names.clone(),
        provenance: dataset.provenance.clone(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(MAGIC.len() + 8 + header_json.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for m in [&dataset.train.x, &dataset.train.y, &dataset.test.x, &dataset.test.y] {
        push_matrix(&mut buf, m);
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, path)?;

    let sidecar = CacheSidecar {
        n_train: header.n_train,
        n_test: header.n_test,
        d: header.d,
        q: header.q,
        feature_names: header.feature_names,
        response_names: header.response_names,
        stats: stats.cloned(),
        provenance: header.provenance,
    };
    fs::write(CacheSidecar::path_for(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::Ingestion { file: path.to_path_buf(), message: e.to_string() })?;
    let bad = |msg: &str| Error::Ingestion { file: path.to_path_buf(), message: msg.into() };
    if !bytes.starts_with(MAGIC) {
        return Err(bad("not a dataset cache"));
    }
    let mut pos = MAGIC.len();
    let len_bytes = bytes.get(pos..pos + 8).ok_or_else(|| bad("cache is truncated"))?;
    let header_len = u64::from_le_bytes(len_bytes.try_into().expect("8 bytes")) as usize;
    pos += 8;
    let header_bytes = bytes.get(pos..pos + header_len).ok_or_else(|| bad("cache is truncated"))?;
    let header: Header = serde_json::from_slice(header_bytes)?;
    pos += header_len;
    let train = RegressionData {
        x: take_matrix(&bytes, &mut pos, header.n_train, header.d, path)?,
        y: take_matrix(&bytes, &mut pos, header.n_train, header.q, path)?,
    };
    let test = RegressionData {
        x: take_matrix(&bytes, &mut pos, header.n_test, header.d, path)?,
        y: take_matrix(&bytes, &mut pos, header.n_test, header.q, path)?,
    };
    if pos != bytes.len() {
        return Err(bad("trailing bytes after matrices"));
    }
    Ok(Dataset {
        train,
        test,
        feature_names: header.feature_names,
        response_names: header.response_names,
        provenance: header.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticParams};

    #[test]
    fn cache_round_trip() {
        let params = SyntheticParams { n_train: 20, n_test: 5, d: 4, q: 3, r: 2, noise_sigma: 0.1 };
        let (data, _) = generate_synthetic(8, &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/synth.bin");
        write_cache(&path, &data, None).unwrap();
        assert_eq!(read_cache(&path).unwrap(), data);
        let side = CacheSidecar::read(&path).unwrap();
        assert_eq!((side.n_train, side.d, side.q), (20, 4, 3));
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        fs::write(&path, b"hello").unwrap();
        assert!(matches!(read_cache(&path), Err(Error::Ingestion { .. })));
    }
}
