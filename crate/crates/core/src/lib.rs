//! Inter-patient ECG beat classification from raw recordings.
//!
//! The pipeline runs from archive files to per-beat predictions:
//! annotated recordings are decoded ([`wfdb`]), beats are cut out, labeled,
//! and described with inter-beat timing features ([`beats`]), each beat is
//! expanded into a multi-scale wavelet image ([`dsp`]), minority classes are
//! reinforced by noise mixing ([`augment`]), and a compact one-dimensional
//! operational network ([`selfonn`], [`nn`]) is trained from scratch
//! ([`train`]) and scored with class-wise metrics and ROC curves ([`eval`]).
//! [`dataset`] wires the stages together with patient-disjoint splits, and
//! [`synth`] generates small self-labeled recordings for end-to-end runs
//! without any archive data.

pub mod augment;
pub mod beats;
pub mod dataset;
pub mod dsp;
pub mod eval;
pub mod nn;
pub mod selfonn;
pub mod synth;
pub mod train;
pub mod wfdb;

pub use augment::{AugmentConfig, NoiseBank, RecordBeats};
pub use beats::{AamiClass, DatasetSplit, LabeledBeat, TemporalFeatures};
pub use dataset::{
    evaluate_packed, ingest, preprocess, train_from_packed, DatasetManifest, Evaluation,
    Normalization, PreprocessConfig, SplitPlan, TrainedModel,
};
pub use dsp::{cwt, normalize_record, NormalizedSignal, ScaleStats, Scalogram, WaveletSpec};
pub use eval::{ClassMetrics, ConfusionMatrix3, Metrics, RocCurve};
pub use nn::Tensor;
pub use selfonn::{GenerativeLayerParams, Model, ModelConfig, ModelInput};
pub use synth::{write_synth_dataset, SynthConfig, SynthManifest};
pub use train::{train_model, train_model_observed, AdamState, EpochStats, TrainConfig};
pub use wfdb::{AnnotationEvent, RawRecord, RecordHeader, SignalSpec};
