//! From annotated signals to labeled beat windows.
//!
//! Every annotated heartbeat becomes a fixed-length window centered on its R
//! peak, a three-way class label, and four inter-beat timing features. Beats
//! too close to the record edges, beats whose symbol falls outside the three
//! classes, and beats without a neighbor on each side are dropped and
//! counted, never silently skipped.

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wfdb::{is_beat_symbol, AnnotationEvent};

#[derive(Debug, Error)]
pub enum BeatsError {
    #[error("beat annotations out of order at sample {sample}")]
    Unordered { sample: u64 },
    #[error("two beats share sample {sample}, timing features are undefined")]
    ZeroInterval { sample: u64 },
    #[error("{0}")]
    Empty(String),
}

/// The three beat classes the classifier distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AamiClass {
    Normal,
    Supraventricular,
    Ventricular,
}

impl AamiClass {
    pub const ALL: [AamiClass; 3] = [
        AamiClass::Normal,
        AamiClass::Supraventricular,
        AamiClass::Ventricular,
    ];

    pub fn index(self) -> usize {
        match self {
            AamiClass::Normal => 0,
            AamiClass::Supraventricular => 1,
            AamiClass::Ventricular => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            AamiClass::Normal => 'N',
            AamiClass::Supraventricular => 'S',
            AamiClass::Ventricular => 'V',
        }
    }

    /// Class for an annotation symbol. Beat symbols outside the three classes
    /// (fusion, paced, unclassifiable, and the rarer bundle-branch variants)
    /// return `None` and are excluded from the task.
    pub fn from_symbol(symbol: char) -> Option<Self> {
        match symbol {
            'N' | 'L' | 'R' | 'e' | 'j' => Some(AamiClass::Normal),
            'A' | 'a' | 'J' | 'S' => Some(AamiClass::Supraventricular),
            'V' | 'E' | '!' => Some(AamiClass::Ventricular),
            _ => None,
        }
    }
}

/// Inter-beat timing descriptors, all in seconds (the ratio is unitless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalFeatures {
    /// Interval from the previous beat to this one.
    pub rr_prev: f64,
    /// Interval from this beat to the next.
    pub rr_next: f64,
    /// `rr_prev / rr_next`.
    pub rr_ratio: f64,
    /// Mean of the intervals lying fully inside a ten-second window around
    /// the beat; falls back to the mean of the two adjacent intervals when
    /// none fits.
    pub rr_avg: f64,
}

impl TemporalFeatures {
    pub fn to_array(self) -> [f64; 4] {
        [self.rr_prev, self.rr_next, self.rr_ratio, self.rr_avg]
    }
}

/// One usable beat: its window of samples, class, and timing features.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBeat {
    pub record: String,
    pub r_sample: u64,
    pub symbol: char,
    pub class: AamiClass,
    pub window: Vec<f64>,
    pub temporal: TemporalFeatures,
    pub augmented: bool,
}

/// Window geometry around the R peak: `pre` samples before it, `len` total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub pre: usize,
    pub len: usize,
}

impl SegmentParams {
    /// A quarter second of lead-in at the given sampling rate, 230 samples
    /// total (the geometry the classifier is built around at 360 Hz).
    pub fn for_fs(fs: f64) -> Self {
        Self {
            pre: (0.25 * fs).round() as usize,
            len: 230,
        }
    }
}

/// Why beats were left out of the segment list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Window would cross the start or end of the signal.
    pub boundary: usize,
    /// First or last beat of the record, missing one adjacent interval.
    pub edge: usize,
    /// Beat symbol outside the three classes.
    pub excluded_class: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.boundary + self.edge + self.excluded_class
    }
}

/// Timing features for beat `i` of `beat_samples`, which must be the strictly
/// increasing R-peak positions of the record's beats. Needs a neighbor on
/// each side.
pub fn temporal_features(
    beat_samples: &[u64],
    i: usize,
    fs: f64,
) -> Result<TemporalFeatures, BeatsError> {
    assert!(i > 0 && i + 1 < beat_samples.len());
    let t = beat_samples[i];
    let prev = beat_samples[i - 1];
    let next = beat_samples[i + 1];
    if prev >= t || t >= next {
        return Err(BeatsError::ZeroInterval { sample: t });
    }
    let rr_prev = (t - prev) as f64 / fs;
    let rr_next = (next - t) as f64 / fs;

    let half_window = 10.0 * fs;
    let lo = t as f64 - half_window;
    let hi = t as f64 + half_window;
    let mut sum = 0.0;
    let mut count = 0usize;
    for pair in beat_samples.windows(2) {
        let (a, b) = (pair[0] as f64, pair[1] as f64);
        if a >= lo && b <= hi {
            sum += (b - a) / fs;
            count += 1;
        }
    }
    let rr_avg = if count > 0 {
        sum / count as f64
    } else {
        (rr_prev + rr_next) / 2.0
    };

    Ok(TemporalFeatures {
        rr_prev,
        rr_next,
        rr_ratio: rr_prev / rr_next,
        rr_avg,
    })
}

/// Cut every usable beat of one record into a window plus features.
///
/// `samples` is the already-normalized signal of the chosen channel. Only
/// beat annotations participate; rhythm and quality marks are ignored for
/// both segmentation and timing. Returns the beats and the drop tally.
pub fn segment_beats(
    record: &str,
    samples: &[f64],
    events: &[AnnotationEvent],
    fs: f64,
    params: SegmentParams,
) -> Result<(Vec<LabeledBeat>, DropCounts), BeatsError> {
    if samples.is_empty() {
        return Err(BeatsError::Empty(format!("record {record} has no samples")));
    }
    let beat_events: Vec<&AnnotationEvent> =
        events.iter().filter(|e| is_beat_symbol(e.symbol)).collect();
    for pair in beat_events.windows(2) {
        if pair[1].sample <= pair[0].sample {
            return Err(BeatsError::Unordered {
                sample: pair[1].sample,
            });
        }
    }
    let beat_samples: Vec<u64> = beat_events.iter().map(|e| e.sample).collect();

    let mut out = Vec::new();
    let mut drops = DropCounts::default();
    for (i, event) in beat_events.iter().enumerate() {
        if i == 0 || i + 1 == beat_events.len() {
            drops.edge += 1;
            continue;
        }
        let class = match AamiClass::from_symbol(event.symbol) {
            Some(c) => c,
            None => {
                drops.excluded_class += 1;
                continue;
            }
        };
        let r = event.sample as usize;
        if r < params.pre || r - params.pre + params.len > samples.len() {
            drops.boundary += 1;
            continue;
        }
        let start = r - params.pre;
        let temporal = temporal_features(&beat_samples, i, fs)?;
        out.push(LabeledBeat {
            record: record.to_string(),
            r_sample: event.sample,
            symbol: event.symbol,
            class,
            window: samples[start..start + params.len].to_vec(),
            temporal,
            augmented: false,
        });
    }
    Ok((out, drops))
}

/// Patient-disjoint halves of the 48-record archive. Four paced records are
/// in neither half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetSplit {
    Train,
    Eval,
}

pub const TRAIN_RECORDS: [&str; 22] = [
    "101", "106", "108", "109", "112", "114", "115", "116", "118", "119", "122", "124", "201",
    "203", "205", "207", "208", "209", "215", "220", "223", "230",
];

pub const EVAL_RECORDS: [&str; 22] = [
    "100", "103", "105", "111", "113", "117", "121", "123", "200", "202", "210", "212", "213",
    "214", "219", "221", "222", "228", "231", "232", "233", "234",
];

pub const EXCLUDED_RECORDS: [&str; 4] = ["102", "104", "107", "217"];

pub fn split_for_record(name: &str) -> Option<DatasetSplit> {
    if TRAIN_RECORDS.contains(&name) {
        Some(DatasetSplit::Train)
    } else if EVAL_RECORDS.contains(&name) {
        Some(DatasetSplit::Eval)
    } else {
        None
    }
}

/// Per-feature affine standardization fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Fit mean and standard deviation per column. A constant column gets
    /// unit scale so it standardizes to zero instead of dividing by zero.
    pub fn fit(rows: &[[f64; 4]]) -> Result<Self, BeatsError> {
        if rows.is_empty() {
            return Err(BeatsError::Empty("no rows to fit".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; 4];
        let mut std = vec![0.0; 4];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for row in rows {
            for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (row[i] - self.mean[i]) / self.std[i];
        }
        out
    }
}
