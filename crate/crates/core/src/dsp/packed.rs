//! On-disk format for preprocessed beats.
//!
//! A packed set is a JSON sidecar next to a flat binary blob. The blob holds
//! one fixed-size block per beat, little-endian `f32`: the scalogram rows in
//! bank order followed by the four raw timing features. The sidecar carries
//! the wavelet bank, per-beat provenance, and drop counts, and names the
//! blob file so the pair travels together.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beats::{AamiClass, DropCounts};
use crate::nn::Tensor;

#[derive(Debug, Error)]
pub enum PackedError {
    #[error("packed io at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("packed sidecar at {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("packed format: {0}")]
    Format(String),
}

const FORMAT_TAG: &str = "ecgonn-beats-v1";
const TEMPORAL_LEN: usize = 4;

/// Where a packed beat came from and what it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedBeatInfo {
    pub record: String,
    pub r_sample: u64,
    pub symbol: char,
    pub class: AamiClass,
    pub augmented: bool,
}

/// One beat as stored: provenance, scalogram, and raw timing features.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedBeat {
    pub info: PackedBeatInfo,
    pub scalogram: Tensor,
    pub temporal: [f64; TEMPORAL_LEN],
}

/// Set-level metadata shared by every beat in a packed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedHeader {
    pub fs: f64,
    pub halfwidth: f64,
    pub bands_hz: Vec<f64>,
    pub scales: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub drops: BTreeMap<String, DropCounts>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    blob: String,
    count: usize,
    #[serde(flatten)]
    header: PackedHeader,
    beats: Vec<PackedBeatInfo>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PackedError + '_ {
    move |source| PackedError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a packed set. `path` is the sidecar path; the blob lands next to it
/// with the extension swapped to `.bin`. Identical inputs produce identical
/// bytes in both files.
pub fn write_packed(
    path: &Path,
    header: &PackedHeader,
    beats: &[PackedBeat],
) -> Result<(), PackedError> {
    let block = header.rows * header.cols + TEMPORAL_LEN;
    let mut blob = Vec::with_capacity(beats.len() * block * 4);
    for (i, beat) in beats.iter().enumerate() {
        if beat.scalogram.shape() != [header.rows, header.cols] {
            return Err(PackedError::Format(format!(
                "beat {i} has shape {:?}, header says [{}, {}]",
                beat.scalogram.shape(),
                header.rows,
                header.cols
            )));
        }
        for &v in beat.scalogram.data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for &v in &beat.temporal {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let blob_path = path.with_extension("bin");
    let blob_name = blob_path
        .file_name()
        .ok_or_else(|| PackedError::Format(format!("no file name in {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let sidecar = Sidecar {
        format: FORMAT_TAG.to_string(),
        blob: blob_name,
        count: beats.len(),
        header: header.clone(),
        beats: beats.iter().map(|b| b.info.clone()).collect(),
    };
    let mut text = serde_json::to_vec_pretty(&sidecar).map_err(|source| PackedError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push(b'\n');
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(path))?;
        }
    }
    fs::write(path, text).map_err(io_err(path))?;
    fs::write(&blob_path, blob).map_err(io_err(&blob_path))?;
    Ok(())
}

/// Read a packed set back, checking the format tag and that the blob length
/// matches the advertised geometry exactly.
pub fn read_packed(path: &Path) -> Result<(PackedHeader, Vec<PackedBeat>), PackedError> {
    let text = fs::read(path).map_err(io_err(path))?;
    let sidecar: Sidecar =
        serde_json::from_slice(&text).map_err(|source| PackedError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    if sidecar.format != FORMAT_TAG {
        return Err(PackedError::Format(format!(
            "unknown format tag {:?}",
            sidecar.format
        )));
    }
    if sidecar.beats.len() != sidecar.count {
        return Err(PackedError::Format(format!(
            "sidecar lists {} beats but count says {}",
            sidecar.beats.len(),
            sidecar.count
        )));
    }
    let blob_path = path
        .parent()
        .map(|d| d.join(&sidecar.blob))
        .unwrap_or_else(|| PathBuf::from(&sidecar.blob));
    let blob = fs::read(&blob_path).map_err(io_err(&blob_path))?;
    let header = sidecar.header;
    let block = header.rows * header.cols + TEMPORAL_LEN;
    if blob.len() != sidecar.count * block * 4 {
        return Err(PackedError::Format(format!(
            "blob is {} bytes, expected {} for {} beats of {} values",
            blob.len(),
            sidecar.count * block * 4,
            sidecar.count,
            block
        )));
    }
    let mut values = Vec::with_capacity(sidecar.count * block);
    for chunk in blob.chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    let mut beats = Vec::with_capacity(sidecar.count);
    for (i, info) in sidecar.beats.into_iter().enumerate() {
        let base = i * block;
        let image = values[base..base + header.rows * header.cols].to_vec();
        let mut temporal = [0.0; TEMPORAL_LEN];
        temporal.copy_from_slice(&values[base + header.rows * header.cols..base + block]);
        beats.push(PackedBeat {
            info,
            scalogram: Tensor::from_vec(&[header.rows, header.cols], image),
            temporal,
        });
    }
    Ok((header, beats))
}
