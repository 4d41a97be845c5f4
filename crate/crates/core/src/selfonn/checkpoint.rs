//! Checkpoint files: a JSON manifest next to a flat little-endian `f32` blob.
//!
//! The manifest records the geometry, run metadata, and for each array its
//! name, shape, and element offset into the blob. Nothing time-dependent is
//! written, so two identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::ModelConfig;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint manifest {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint blob mismatch: {0}")]
    Blob(String),
}

/// One stored array, in `f64` on the application side; quantized to `f32` on
/// disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: String, shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { name, shape, data }
    }
}

/// Run metadata carried alongside the arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epoch: usize,
    pub config: ModelConfig,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    seed: u64,
    epoch: usize,
    config: ModelConfig,
    metrics: BTreeMap<String, f64>,
    blob: String,
    arrays: Vec<ArrayEntry>,
}

const FORMAT_TAG: &str = "ecgonn-checkpoint-v1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `manifest_path` (JSON) and a sibling `.bin` blob holding every array
/// as consecutive little-endian `f32` values, in the order given.
pub fn save_checkpoint(
    manifest_path: &Path,
    meta: &CheckpointMeta,
    arrays: &[NamedArray],
) -> Result<(), CheckpointError> {
    let blob_path = manifest_path.with_extension("bin");
    let blob_name = blob_path
        .file_name()
        .ok_or_else(|| CheckpointError::Blob("manifest path has no file name".into()))?
        .to_string_lossy()
        .into_owned();

    let mut entries = Vec::with_capacity(arrays.len());
    let mut blob = Vec::new();
    let mut offset = 0usize;
    for arr in arrays {
        entries.push(ArrayEntry {
            name: arr.name.clone(),
            shape: arr.shape.clone(),
            offset,
            len: arr.data.len(),
        });
        for &v in &arr.data {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
        offset += arr.data.len();
    }

    let manifest = Manifest {
        format: FORMAT_TAG.into(),
        seed: meta.seed,
        epoch: meta.epoch,
        config: meta.config.clone(),
        metrics: meta.metrics.clone(),
        blob: blob_name,
        arrays: entries,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|source| CheckpointError::Json {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    json.push(b'\n');

    if let Some(parent) = manifest_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let mut f = fs::File::create(manifest_path).map_err(io_err(manifest_path))?;
    f.write_all(&json).map_err(io_err(manifest_path))?;
    let mut f = fs::File::create(&blob_path).map_err(io_err(&blob_path))?;
    f.write_all(&blob).map_err(io_err(&blob_path))?;
    Ok(())
}

/// Read a manifest and its blob back into `f64` arrays.
pub fn load_checkpoint(
    manifest_path: &Path,
) -> Result<(CheckpointMeta, Vec<NamedArray>), CheckpointError> {
    let json = fs::read(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: Manifest =
        serde_json::from_slice(&json).map_err(|source| CheckpointError::Json {
            path: manifest_path.to_path_buf(),
            source,
        })?;
    if manifest.format != FORMAT_TAG {
        return Err(CheckpointError::Blob(format!(
            "unknown format tag {:?}",
            manifest.format
        )));
    }
    let blob_path = manifest_path
        .parent()
        .map(|p| p.join(&manifest.blob))
        .unwrap_or_else(|| PathBuf::from(&manifest.blob));
    let blob = fs::read(&blob_path).map_err(io_err(&blob_path))?;
    let total: usize = manifest.arrays.iter().map(|a| a.len).sum();
    if blob.len() != total * 4 {
        return Err(CheckpointError::Blob(format!(
            "blob {} holds {} bytes, manifest describes {}",
            blob_path.display(),
            blob.len(),
            total * 4
        )));
    }
    let mut arrays = Vec::with_capacity(manifest.arrays.len());
    for entry in &manifest.arrays {
        if entry.shape.iter().product::<usize>() != entry.len {
            return Err(CheckpointError::Blob(format!(
                "array {} shape {:?} does not cover {} elements",
                entry.name, entry.shape, entry.len
            )));
        }
        let start = entry.offset * 4;
        let end = start + entry.len * 4;
        if end > blob.len() {
            return Err(CheckpointError::Blob(format!(
                "array {} extends past the blob",
                entry.name
            )));
        }
        let data = blob[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        arrays.push(NamedArray {
            name: entry.name.clone(),
            shape: entry.shape.clone(),
            data,
        });
    }
    Ok((
        CheckpointMeta {
            seed: manifest.seed,
            epoch: manifest.epoch,
            config: manifest.config,
            metrics: manifest.metrics,
        },
        arrays,
    ))
}
