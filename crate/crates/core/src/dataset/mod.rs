//! From records on disk to model-ready inputs.
//!
//! This module strings the pipeline together: plan a patient-disjoint split,
//! read and segment each record, grow rare classes with noisy copies on the
//! training side, transform beats to scalograms, standardize with statistics
//! fitted on training data alone, and run the trained model over a held-out
//! set. Each stage leaves a file behind (packed beat sets, a dataset
//! manifest, checkpoints), so a finished run directory describes itself.


use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{rebalance, AugmentConfig, AugmentError, NoiseBank, RecordBeats};
use crate::beats::{
    segment_beats, AamiClass, BeatsError, DropCounts, FeatureStats, SegmentParams,
};
use crate::dsp::{
    cwt, normalize_record, write_packed, DspError, PackedBeat, PackedBeatInfo, PackedError,
    PackedHeader, ScaleStats, WaveletSpec,
};
use crate::eval::{class_roc, ConfusionMatrix3, EvalError, Metrics, RocCurve};
use crate::nn::NnError;
use crate::selfonn::checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta, NamedArray,
};
use crate::selfonn::{Model, ModelConfig, ModelInput};
use crate::synth::SynthManifest;
use crate::train::{make_folds, train_model, EpochStats, TrainConfig, TrainError};
use crate::wfdb::{adu_to_physical, parse_annotations, read_record, WfdbError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Wfdb(#[from] WfdbError),
    #[error(transparent)]
    Beats(#[from] BeatsError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Packed(#[from] PackedError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("dataset i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset manifest {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("record {record} appears in both halves of the split")]
    Leakage { record: String },
    #[error("record {record} is listed twice")]
    Duplicate { record: String },
    #[error("record {record} is sampled at {got} Hz, the rest at {expect} Hz")]
    MixedRate {
        record: String,
        expect: f64,
        got: f64,
    },
    #[error("{0}")]
    Empty(String),
    #[error("checkpoint is missing array {0}")]
    MissingArray(String),
}

/// File names a preprocessed dataset directory is built from.
pub const DATASET_MANIFEST: &str = "dataset.json";
pub const TRAIN_SET: &str = "train.json";
pub const EVAL_SET: &str = "eval.json";

/// Which records train the model and which only ever evaluate it. The two
/// lists never share a patient, so no evaluation beat can leak into training
/// or into any standardization statistic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub eval: Vec<String>,
}

impl SplitPlan {
    /// The archive's first half trains, the second evaluates.
    pub fn mit_forward() -> Self {
        Self {
            train: crate::beats::TRAIN_RECORDS.iter().map(|s| s.to_string()).collect(),
            eval: crate::beats::EVAL_RECORDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The reverse direction: train on the second half, evaluate on the first.
    pub fn mit_reversed() -> Self {
        let fwd = Self::mit_forward();
        Self {
            train: fwd.eval,
            eval: fwd.train,
        }
    }

    /// Explicit record lists, checked for overlap and duplicates.
    pub fn from_lists(train: Vec<String>, eval: Vec<String>) -> Result<Self, DatasetError> {
        let plan = Self { train, eval };
        plan.validate()?;
        Ok(plan)
    }

    /// Adopt the split a synthetic corpus was generated with.
    pub fn from_synth_manifest(manifest: &SynthManifest) -> Result<Self, DatasetError> {
        Self::from_lists(manifest.train.clone(), manifest.eval.clone())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.train.is_empty() {
            return Err(DatasetError::Empty("no training records in split".into()));
        }
        if self.eval.is_empty() {
            return Err(DatasetError::Empty("no evaluation records in split".into()));
        }
        let mut train_set = BTreeSet::new();
        for name in &self.train {
            if !train_set.insert(name.as_str()) {
                return Err(DatasetError::Duplicate {
                    record: name.clone(),
                });
            }
        }
        let mut eval_set = BTreeSet::new();
        for name in &self.eval {
            if !eval_set.insert(name.as_str()) {
                return Err(DatasetError::Duplicate {
                    record: name.clone(),
                });
            }
            if train_set.contains(name.as_str()) {
                return Err(DatasetError::Leakage {
                    record: name.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Fail unless the two record sets share no patient.
pub fn assert_patient_disjoint<'a>(
    train: impl IntoIterator<Item = &'a str>,
    eval: impl IntoIterator<Item = &'a str>,
) -> Result<(), DatasetError> {
    let train: BTreeSet<&str> = train.into_iter().collect();
    for name in eval {
        if train.contains(name) {
            return Err(DatasetError::Leakage {
                record: name.to_string(),
            });
        }
    }
    Ok(())
}

/// Group training records into `k` patient-wise folds: a seeded shuffle of
/// the list, then contiguous slices as even as the division allows.
pub fn plan_patient_folds(
    records: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>, DatasetError> {
    let mut shuffled: Vec<String> = records.to_vec();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let folds = make_folds(shuffled.len(), k)?;
    Ok(folds
        .into_iter()
        .map(|indices| indices.into_iter().map(|i| shuffled[i].clone()).collect())
        .collect())
}

/// One record read, scaled to physical units, normalized, and cut into
/// beats.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecord {
    pub fs: f64,
    pub n_samples: u64,
    /// Normalized channel-0 signal plus every usable beat.
    pub beats: RecordBeats,
    pub drops: DropCounts,
}

/// Read `name` from `dir`: decode channel 0, convert to millivolts,
/// normalize, parse its annotations, and segment. `params` falls back to the
/// record's own sampling rate.
pub fn load_record(
    dir: &Path,
    name: &str,
    params: Option<SegmentParams>,
) -> Result<LoadedRecord, DatasetError> {
    let raw = read_record(dir, name)?;
    let spec = raw
        .header
        .signals
        .first()
        .ok_or_else(|| DatasetError::Empty(format!("record {name} declares no signals")))?;
    let channel = raw
        .channels
        .first()
        .ok_or_else(|| DatasetError::Empty(format!("record {name} holds no samples")))?;
    let physical: Vec<f64> = channel
        .iter()
        .map(|&v| adu_to_physical(v, spec.gain, spec.baseline))
        .collect();
    let normalized = normalize_record(&physical)?;

    let atr_path = dir.join(format!("{name}.atr"));
    let bytes = fs::read(&atr_path).map_err(|source| DatasetError::Io {
        path: atr_path,
        source,
    })?;
    let events = parse_annotations(&bytes)?;

    let fs = raw.header.fs;
    let params = params.unwrap_or_else(|| SegmentParams::for_fs(fs));
    let (beats, drops) = segment_beats(name, &normalized.samples, &events, fs, params)?;
    Ok(LoadedRecord {
        fs,
        n_samples: raw.header.n_samples,
        beats: RecordBeats {
            record: name.to_string(),
            signal: normalized.samples,
            beats,
        },
        drops,
    })
}

/// Per-record row of an ingest manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub fs: f64,
    pub n_samples: u64,
    /// Usable beats per class, in class-index order.
    pub counts: [usize; 3],
    pub drops: DropCounts,
}

/// What an archive directory holds, record by record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestManifest {
    pub records: BTreeMap<String, RecordSummary>,
    /// Usable beats per class summed over every record.
    pub totals: [usize; 3],
}

/// Segment every named record and tally its beats. Purely informational; no
/// artifacts besides the returned manifest.
pub fn ingest(dir: &Path, names: &[String]) -> Result<IngestManifest, DatasetError> {
    if names.is_empty() {
        return Err(DatasetError::Empty("no records found".into()));
    }
    let mut records = BTreeMap::new();
    let mut totals = [0usize; 3];
    for name in names {
        let loaded = load_record(dir, name, None)?;
        let mut counts = [0usize; 3];
        for beat in &loaded.beats.beats {
            counts[beat.class.index()] += 1;
        }
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
        records.insert(
            name.clone(),
            RecordSummary {
                fs: loaded.fs,
                n_samples: loaded.n_samples,
                counts,
                drops: loaded.drops,
            },
        );
    }
    Ok(IngestManifest { records, totals })
}

/// Everything the trained network needs to turn a raw beat into its input:
/// per-scale scalogram statistics and per-column timing statistics, both
/// fitted on training beats only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: ScaleStats,
    pub temporal: FeatureStats,
}

impl Normalization {
    /// Fit both statistics over one set of packed beats.
    pub fn fit(beats: &[PackedBeat]) -> Result<Self, DatasetError> {
        if beats.is_empty() {
            return Err(DatasetError::Empty("no beats to fit statistics on".into()));
        }
        let scale = ScaleStats::fit(beats.iter().map(|b| &b.scalogram))?;
        let rows: Vec<[f64; 4]> = beats.iter().map(|b| b.temporal).collect();
        let temporal = FeatureStats::fit(&rows)?;
        Ok(Self { scale, temporal })
    }

    /// Standardize one packed beat into a model input.
    pub fn input_for(&self, beat: &PackedBeat) -> ModelInput {
        let mut image = beat.scalogram.clone();
        self.scale.apply(&mut image);
        ModelInput {
            image,
            temporal: self.temporal.apply(beat.temporal).to_vec(),
        }
    }

    /// The statistics as checkpoint arrays, alongside the model's own.
    pub fn to_arrays(&self) -> Vec<NamedArray> {
        let arr = |name: &str, data: &[f64]| {
            NamedArray::new(name.to_string(), vec![data.len()], data.to_vec())
        };
        vec![
            arr("norm.scale.mean", &self.scale.mean),
            arr("norm.scale.std", &self.scale.std),
            arr("norm.temporal.mean", &self.temporal.mean),
            arr("norm.temporal.std", &self.temporal.std),
        ]
    }

    pub fn from_arrays(arrays: &[NamedArray]) -> Result<Self, DatasetError> {
        let find = |name: &str| -> Result<Vec<f64>, DatasetError> {
            arrays
                .iter()
                .find(|a| a.name == name)
                .map(|a| a.data.clone())
                .ok_or_else(|| DatasetError::MissingArray(name.to_string()))
        };
        Ok(Self {
            scale: ScaleStats {
                mean: find("norm.scale.mean")?,
                std: find("norm.scale.std")?,
            },
            temporal: FeatureStats {
                mean: find("norm.temporal.mean")?,
                std: find("norm.temporal.std")?,
            },
        })
    }
}

/// Preprocessing knobs; the defaults follow the classifier's geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Beat window geometry; derived from the sampling rate when absent.
    pub segment: Option<SegmentParams>,
    /// Rare-class growth on the training side; skipped when absent.
    pub augment: Option<AugmentConfig>,
}

/// One half of a preprocessed dataset, as recorded in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub records: Vec<String>,
    pub beats: usize,
    /// Beats per class, copies included.
    pub counts: [usize; 3],
    /// Noisy copies per class within `counts`.
    pub augmented: [usize; 3],
}

/// The self-description a preprocessed directory carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub fs: f64,
    pub segment: SegmentParams,
    pub train: SplitSummary,
    pub eval: SplitSummary,
    /// Fitted on the training beats listed above, never on evaluation beats.
    pub norm: Normalization,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| DatasetError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| DatasetError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| DatasetError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Load one side of the split, enforcing a single sampling rate.
fn load_side(
    data_dir: &Path,
    names: &[String],
    segment: Option<SegmentParams>,
    fs_seen: &mut Option<f64>,
) -> Result<(Vec<LoadedRecord>, BTreeMap<String, DropCounts>), DatasetError> {
    let mut loaded = Vec::with_capacity(names.len());
    let mut drops = BTreeMap::new();
    for name in names {
        let record = load_record(data_dir, name, segment)?;
        match *fs_seen {
            None => *fs_seen = Some(record.fs),
            Some(expect) if record.fs != expect => {
                return Err(DatasetError::MixedRate {
                    record: name.clone(),
                    expect,
                    got: record.fs,
                });
            }
            Some(_) => {}
        }
        drops.insert(name.clone(), record.drops);
        loaded.push(record);
    }
    Ok((loaded, drops))
}

/// Transform beats to packed form with the given wavelet bank.
fn pack_beats<'a>(
    beats: impl IntoIterator<Item = &'a crate::beats::LabeledBeat>,
    spec: &WaveletSpec,
) -> Result<Vec<PackedBeat>, DatasetError> {
    let mut out = Vec::new();
    for beat in beats {
        let scalogram = cwt(&beat.window, spec)?;
        out.push(PackedBeat {
            info: PackedBeatInfo {
                record: beat.record.clone(),
                r_sample: beat.r_sample,
                symbol: beat.symbol,
                class: beat.class,
                augmented: beat.augmented,
            },
            scalogram: scalogram.data,
            temporal: beat.temporal.to_array(),
        });
    }
    Ok(out)
}

fn class_counts<'a>(beats: impl IntoIterator<Item = &'a PackedBeat>) -> ([usize; 3], [usize; 3]) {
    let mut counts = [0usize; 3];
    let mut augmented = [0usize; 3];
    for beat in beats {
        counts[beat.info.class.index()] += 1;
        if beat.info.augmented {
            augmented[beat.info.class.index()] += 1;
        }
    }
    (counts, augmented)
}

/// Duration of synthesized noise backing the augmentation mixes.
const NOISE_BANK_SECONDS: f64 = 60.0;

/// Build a preprocessed dataset directory: `train.json`, `eval.json`, their
/// blobs, and `dataset.json` describing both halves.
///
/// Training records are optionally rebalanced with noisy rare-beat copies
/// before the wavelet transform; evaluation records never are. The returned
/// manifest's statistics come from the training beats alone.
pub fn preprocess(
    data_dir: &Path,
    plan: &SplitPlan,
    config: &PreprocessConfig,
    out_dir: &Path,
) -> Result<DatasetManifest, DatasetError> {
    plan.validate()?;
    let mut fs_seen = None;
    let (train_records, train_drops) =
        load_side(data_dir, &plan.train, config.segment, &mut fs_seen)?;
    let (eval_records, eval_drops) = load_side(data_dir, &plan.eval, config.segment, &mut fs_seen)?;
    let fs = fs_seen.expect("split validation guarantees at least one record");
    let segment = config.segment.unwrap_or_else(|| SegmentParams::for_fs(fs));

    let train_sources: Vec<RecordBeats> = train_records.into_iter().map(|r| r.beats).collect();
    let mut copies = Vec::new();
    if let Some(augment) = &config.augment {
        let bank = NoiseBank::synthetic((NOISE_BANK_SECONDS * fs) as usize, fs, augment.seed);
        copies = rebalance(&train_sources, &segment, fs, &bank, augment)?.0;
    }

    let spec = WaveletSpec::default_for_fs(fs)?;
    let train_beats = pack_beats(
        train_sources
            .iter()
            .flat_map(|r| r.beats.iter())
            .chain(copies.iter()),
        &spec,
    )?;
    let eval_beats = pack_beats(
        eval_records.iter().flat_map(|r| r.beats.beats.iter()),
        &spec,
    )?;
    if train_beats.is_empty() {
        return Err(DatasetError::Empty("training split has no usable beats".into()));
    }
    if eval_beats.is_empty() {
        return Err(DatasetError::Empty("evaluation split has no usable beats".into()));
    }

    let header = |drops: BTreeMap<String, DropCounts>| PackedHeader {
        fs,
        halfwidth: spec.halfwidth,
        bands_hz: spec.bands_hz.clone(),
        scales: spec.scales.clone(),
        rows: spec.scales.len(),
        cols: segment.len,
        drops,
    };
    write_packed(&out_dir.join(TRAIN_SET), &header(train_drops), &train_beats)?;
    write_packed(&out_dir.join(EVAL_SET), &header(eval_drops), &eval_beats)?;

    let norm = Normalization::fit(&train_beats)?;
    let (train_counts, train_augmented) = class_counts(&train_beats);
    let (eval_counts, eval_augmented) = class_counts(&eval_beats);
    let manifest = DatasetManifest {
        fs,
        segment,
        train: SplitSummary {
            records: plan.train.clone(),
            beats: train_beats.len(),
            counts: train_counts,
            augmented: train_augmented,
        },
        eval: SplitSummary {
            records: plan.eval.clone(),
            beats: eval_beats.len(),
            counts: eval_counts,
            augmented: eval_augmented,
        },
        norm,
    };
    write_json(&out_dir.join(DATASET_MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Read back the manifest a [`preprocess`] run wrote.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, DatasetError> {
    read_json(&dir.join(DATASET_MANIFEST))
}

/// Standardized inputs and class labels for one packed set.
pub fn assemble(
    beats: &[PackedBeat],
    norm: &Normalization,
) -> (Vec<ModelInput>, Vec<usize>) {
    let inputs = beats.iter().map(|b| norm.input_for(b)).collect();
    let labels = beats.iter().map(|b| b.info.class.index()).collect();
    (inputs, labels)
}

/// Initialize a model and train it on a packed set. The same seed drives
/// both the initialization and the shuffling, so one number pins the run.
pub fn train_from_packed(
    beats: &[PackedBeat],
    norm: &Normalization,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(Model, Vec<EpochStats>), DatasetError> {
    let (inputs, labels) = assemble(beats, norm);
    let mut model = Model::init(model_config, train_config.seed)?;
    let history = train_model(&mut model, &inputs, &labels, train_config, on_epoch)?;
    Ok((model, history))
}

/// A model together with the input statistics it was trained behind. The
/// pair is what a checkpoint file stores; neither half is useful alone.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub norm: Normalization,
}

impl TrainedModel {
    pub fn save(&self, path: &Path, meta: &CheckpointMeta) -> Result<(), DatasetError> {
        let mut arrays = self.model.to_arrays();
        arrays.extend(self.norm.to_arrays());
        save_checkpoint(path, meta, &arrays)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(CheckpointMeta, Self), DatasetError> {
        let (meta, arrays) = load_checkpoint(path)?;
        let model = Model::from_arrays(&meta.config, &arrays)?;
        let norm = Normalization::from_arrays(&arrays)?;
        Ok((meta, Self { model, norm }))
    }

    /// Class and softmax scores for one packed beat.
    pub fn predict_beat(&self, beat: &PackedBeat) -> Result<(AamiClass, Vec<f64>), DatasetError> {
        let input = self.norm.input_for(beat);
        let (index, scores) = self.model.predict(&input)?;
        let class = AamiClass::from_index(index)
            .ok_or_else(|| DatasetError::Empty(format!("class index {index} out of range")))?;
        Ok((class, scores))
    }
}

/// One evaluated beat: where it came from, what the model said, and the
/// scores behind the call.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatPrediction {
    pub info: PackedBeatInfo,
    pub predicted: AamiClass,
    pub scores: Vec<f64>,
}

/// A full evaluation pass: the matrix and rates, per-beat calls, and the
/// rare-class sweeps. A sweep is absent when its class never appears.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub predictions: Vec<BeatPrediction>,
    pub roc_s: Option<RocCurve>,
    pub roc_v: Option<RocCurve>,
}

/// Run the model over a packed set. Noisy training copies are skipped if any
/// slipped in; only genuine beats are scored.
pub fn evaluate_packed(
    trained: &TrainedModel,
    beats: &[PackedBeat],
) -> Result<Evaluation, DatasetError> {
    let mut matrix = ConfusionMatrix3::new();
    let mut predictions = Vec::new();
    let mut probabilities = Vec::new();
    let mut truths = Vec::new();
    for beat in beats {
        if beat.info.augmented {
            continue;
        }
        let (predicted, scores) = trained.predict_beat(beat)?;
        matrix.add(beat.info.class, predicted);
        truths.push(beat.info.class);
        probabilities.push(scores.clone());
        predictions.push(BeatPrediction {
            info: beat.info.clone(),
            predicted,
            scores,
        });
    }
    if predictions.is_empty() {
        return Err(DatasetError::Empty("no beats to evaluate".into()));
    }
    let metrics = Metrics::from_matrix(&matrix)?;
    let sweep = |class: AamiClass| match class_roc(&probabilities, &truths, class) {
        Ok(curve) => Some(curve),
        Err(_) => None,
    };
    Ok(Evaluation {
        metrics,
        predictions,
        roc_s: sweep(AamiClass::Supraventricular),
        roc_v: sweep(AamiClass::Ventricular),
    })
}
