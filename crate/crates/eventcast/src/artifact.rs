//! On-disk form of a preprocessed dataset: a binary columnar file next to a
//! JSON sidecar holding the feature metadata and fitted preprocessing state.
//!
//! Layout of the `.evc` file, all little-endian:
//!
//! ```text
//! magic  "EVCDATA1"            8 bytes
//! n_rows u64, n_cols u32
//! per column: tag u8 (0 = u32 codes, 1 = f64 raw), then n_rows values
//! labels: n_rows u32
//! ```

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretize::DiscretizerState;
use crate::encode::{EncodedDataset, Encoder, Feature, FeatureData, FeatureMeta};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EVCDATA1";

/// Sidecar JSON written next to the binary columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub feature_meta: Vec<FeatureMeta>,
    pub class_names: Vec<String>,
    pub row_count: usize,
    /// Rows dropped as corrupt during CSV ingestion.
    pub dropped_rows: usize,
    /// Feature counts along the pipeline: raw, after encoding, after
    /// expansion, after variance filtering.
    pub feature_counts: Vec<(String, usize)>,
    pub encoder: Option<Encoder>,
    pub discretizer: Option<DiscretizerState>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

/// Write the dataset and its sidecar. Byte-identical for identical inputs.
pub fn write_dataset(
    path: impl AsRef<Path>,
    dataset: &EncodedDataset,
    sidecar: &DatasetSidecar,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::data(format!("cannot write {}: {e}", path.display()));

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(dataset.n_rows as u64).to_le_bytes());
    buf.extend_from_slice(&(dataset.features.len() as u32).to_le_bytes());
    for feature in &dataset.features {
        match &feature.data {
            FeatureData::Codes(codes) => {
                buf.push(0);
                for &v in codes {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            FeatureData::Raw(values) => {
                buf.push(1);
                for &v in values {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    for &label in &dataset.labels {
        buf.extend_from_slice(&label.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;

    let json = serde_json::to_vec_pretty(sidecar)
        .map_err(|e| Error::invariant(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(sidecar_path(path), json).map_err(io_err)?;
    Ok(())
}

/// Read a dataset and its sidecar back.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<(EncodedDataset, DatasetSidecar)> {
    let path = path.as_ref();
    let corrupt = |what: &str| {
        Error::data(format!(
            "{} is truncated or not a dataset file ({what})",
            path.display()
        ))
    };
    let mut file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;

    let sidecar: DatasetSidecar = {
        let sc_path = sidecar_path(path);
        let sc_bytes = std::fs::read(&sc_path)
            .map_err(|e| Error::data(format!("cannot read sidecar {}: {e}", sc_path.display())))?;
        serde_json::from_slice(&sc_bytes)
            .map_err(|e| Error::data(format!("sidecar {} is corrupt: {e}", sc_path.display())))?
    };

    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(corrupt("unexpected end of file"));
        }
        let slice = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(slice)
    };
    if take(&mut pos, 8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let n_rows = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let n_cols = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    if n_cols != sidecar.feature_meta.len() {
        return Err(corrupt("column count disagrees with sidecar"));
    }
    let mut features = Vec::with_capacity(n_cols);
    for meta in &sidecar.feature_meta {
        let tag = take(&mut pos, 1)?[0];
        let data = match tag {
            0 => {
                let raw = take(&mut pos, n_rows * 4)?;
                FeatureData::Codes(
                    raw.chunks_exact(4)
                        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            1 => {
                let raw = take(&mut pos, n_rows * 8)?;
                FeatureData::Raw(
                    raw.chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            _ => return Err(corrupt("unknown column tag")),
        };
        features.push(Feature {
            meta: meta.clone(),
            data,
        });
    }
    let raw = take(&mut pos, n_rows * 4)?;
    let labels: Vec<u32> = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok((
        EncodedDataset {
            n_rows,
            features,
            labels,
            class_names: sidecar.class_names.clone(),
        },
        sidecar,
    ))
}
