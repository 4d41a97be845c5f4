//! Minority-class reinforcement by noise mixing.
//!
//! The two rarer beat classes are multiplied by re-cutting their windows
//! from noisy copies of the signal: the record is tiled into fixed-length
//! stretches, each stretch holding a rare beat gets realistic noise added at
//! a randomly chosen signal-to-noise ratio, and only the rare beats are kept
//! from the copy. Runs on the normalized signal, before the wavelet stage,
//! so the same preprocessing sees the noisy beats.


use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beats::{AamiClass, LabeledBeat, SegmentParams};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("{0}")]
    Empty(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("no source beats of class {class:?} to copy from")]
    NoMinoritySource { class: AamiClass },
    #[error("class {class:?} still at {have} of a {want} target after {passes} passes")]
    Unbalanced {
        class: AamiClass,
        have: usize,
        want: usize,
        passes: usize,
    },
}

/// Mixing parameters and the rebalancing target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Stretch length in seconds; stretches tile the record back to back.
    pub window_seconds: f64,
    /// Signal-to-noise ratios to draw from, in decibels.
    pub snr_choices_db: Vec<f64>,
    /// Each rare class is grown until it reaches this fraction of the
    /// majority count.
    pub target_fraction: f64,
    pub seed: u64,
    /// Safety valve on the copy loop.
    pub max_passes: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            window_seconds: 20.0,
            snr_choices_db: vec![0.0, 6.0, 12.0, 18.0, 24.0],
            target_fraction: 0.25,
            seed: 0,
            max_passes: 200,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.window_seconds > 0.0) {
            return Err(AugmentError::BadConfig("window must be positive".into()));
        }
        if self.snr_choices_db.is_empty() {
            return Err(AugmentError::BadConfig("no signal-to-noise choices".into()));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(AugmentError::BadConfig(
                "target fraction must be in (0, 1]".into(),
            ));
        }
        if self.max_passes == 0 {
            return Err(AugmentError::BadConfig("pass limit must be positive".into()));
        }
        Ok(())
    }
}

/// Interference sources to mix in, one long trace per kind.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBank {
    pub names: Vec<String>,
    pub sources: Vec<Vec<f64>>,
}

impl NoiseBank {
    pub fn new(names: Vec<String>, sources: Vec<Vec<f64>>) -> Result<Self, AugmentError> {
        if sources.is_empty() || sources.iter().any(Vec::is_empty) {
            return Err(AugmentError::Empty("noise bank has an empty source".into()));
        }
        Ok(Self { names, sources })
    }

    /// A stand-in bank when no recorded interference is available: baseline
    /// wander, mains hum with a harmonic, and broadband muscle activity.
    pub fn synthetic(len: usize, fs: f64, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut wander = Vec::with_capacity(len);
        let mut hum = Vec::with_capacity(len);
        let mut muscle = Vec::with_capacity(len);
        let mut drift: f64 = 0.0;
        let mut smooth: f64 = 0.0;
        for i in 0..len {
            let t = i as f64 / fs;
            drift += rng.gen_range(-0.01..0.01);
            drift *= 0.999;
            wander.push((2.0 * std::f64::consts::PI * 0.3 * t).sin() + drift);
            hum.push(
                (2.0 * std::f64::consts::PI * 60.0 * t).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * 120.0 * t + 1.0).sin(),
            );
            // first-order smoothing keeps some low-frequency body in the hash
            smooth = 0.7 * smooth + 0.3 * rng.gen_range(-1.0..1.0);
            muscle.push(smooth);
        }
        Self {
            names: vec!["wander".into(), "hum".into(), "muscle".into()],
            sources: vec![wander, hum, muscle],
        }
    }

    /// A slice of source `index` starting at `offset`, tiling cyclically when
    /// the trace is shorter than the request.
    pub fn slice(&self, index: usize, offset: usize, len: usize) -> Vec<f64> {
        let src = &self.sources[index];
        (0..len).map(|i| src[(offset + i) % src.len()]).collect()
    }
}

/// Mean square power of a trace.
pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Amplitude for the noise so the mixture sits at `snr_db`:
/// `sqrt(P_signal / (P_noise * 10^(snr/10)))`.
pub fn mixing_gain(signal_power: f64, noise_power: f64, snr_db: f64) -> f64 {
    (signal_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// A stretch of the record holding at least one rare beat: its sample range
/// and the indices of the rare beats inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorityWindow {
    pub start: usize,
    pub end: usize,
    pub beat_indices: Vec<usize>,
}

/// Tile `0..record_len` into back-to-back stretches of `window_len` samples
/// and keep those containing a supraventricular or ventricular beat.
pub fn minority_windows(
    beats: &[LabeledBeat],
    record_len: usize,
    window_len: usize,
) -> Vec<MinorityWindow> {
    let mut windows = Vec::new();
    if window_len == 0 {
        return windows;
    }
    let count = record_len.div_ceil(window_len);
    for w in 0..count {
        let start = w * window_len;
        let end = (start + window_len).min(record_len);
        let beat_indices: Vec<usize> = beats
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                b.class != AamiClass::Normal
                    && (start..end).contains(&(b.r_sample as usize))
            })
            .map(|(i, _)| i)
            .collect();
        if !beat_indices.is_empty() {
            windows.push(MinorityWindow {
                start,
                end,
                beat_indices,
            });
        }
    }
    windows
}

/// Re-cut the rare beats of one stretch from a noisy copy of the signal.
/// The mixed slice extends past the stretch by the window geometry so every
/// beat inside can be cut whole. Timing features carry over unchanged
/// because additive noise moves no beat.
pub fn noisy_copies(
    signal: &[f64],
    beats: &[LabeledBeat],
    window: &MinorityWindow,
    params: &SegmentParams,
    noise: &NoiseBank,
    source: usize,
    offset: usize,
    snr_db: f64,
) -> Vec<LabeledBeat> {
    let post = params.len - params.pre;
    let slice_start = window.start.saturating_sub(params.pre);
    let slice_end = (window.end + post).min(signal.len());
    let clean = &signal[slice_start..slice_end];
    let noise_slice = noise.slice(source, offset, clean.len());
    let gain = mixing_gain(mean_power(clean), mean_power(&noise_slice), snr_db);
    let noisy: Vec<f64> = clean
        .iter()
        .zip(&noise_slice)
        .map(|(s, n)| s + gain * n)
        .collect();
    window
        .beat_indices
        .iter()
        .map(|&i| {
            let beat = &beats[i];
            let cut_start = beat.r_sample as usize - params.pre - slice_start;
            LabeledBeat {
                window: noisy[cut_start..cut_start + params.len].to_vec(),
                augmented: true,
                ..beat.clone()
            }
        })
        .collect()
}

/// One record ready for augmentation: its normalized signal and the beats
/// already segmented from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordBeats {
    pub record: String,
    pub signal: Vec<f64>,
    pub beats: Vec<LabeledBeat>,
}

/// What the rebalancing loop did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub windows: usize,
    pub passes: usize,
    /// New beats per class; the majority entry stays zero.
    pub added: [usize; 3],
    /// Class counts after appending the copies.
    pub final_counts: [usize; 3],
}

/// Copy rare beats from noisy stretches until both rare classes reach the
/// configured fraction of the majority count. Returns only the new beats;
/// the caller appends them to the originals.
pub fn rebalance(
    records: &[RecordBeats],
    params: &SegmentParams,
    fs: f64,
    bank: &NoiseBank,
    config: &AugmentConfig,
) -> Result<(Vec<LabeledBeat>, AugmentStats), AugmentError> {
    config.validate()?;
    let mut counts = [0usize; 3];
    for r in records {
        for b in &r.beats {
            counts[b.class.index()] += 1;
        }
    }
    let majority = counts[AamiClass::Normal.index()];
    let want = (config.target_fraction * majority as f64).ceil() as usize;

    let window_len = (config.window_seconds * fs).round() as usize;
    let per_record: Vec<Vec<MinorityWindow>> = records
        .iter()
        .map(|r| minority_windows(&r.beats, r.signal.len(), window_len))
        .collect();
    let total_windows: usize = per_record.iter().map(Vec::len).sum();

    for class in [AamiClass::Supraventricular, AamiClass::Ventricular] {
        if counts[class.index()] == 0 && want > 0 {
            return Err(AugmentError::NoMinoritySource { class });
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut added = [0usize; 3];
    let mut out = Vec::new();
    let mut passes = 0;
    let deficit = |counts: &[usize; 3], added: &[usize; 3]| {
        [AamiClass::Supraventricular, AamiClass::Ventricular]
            .into_iter()
            .any(|c| counts[c.index()] + added[c.index()] < want)
    };
    while deficit(&counts, &added) {
        if passes == config.max_passes {
            let class = [AamiClass::Supraventricular, AamiClass::Ventricular]
                .into_iter()
                .find(|c| counts[c.index()] + added[c.index()] < want)
                .unwrap();
            return Err(AugmentError::Unbalanced {
                class,
                have: counts[class.index()] + added[class.index()],
                want,
                passes,
            });
        }
        passes += 1;
        let mut produced = false;
        for (record, windows) in records.iter().zip(&per_record) {
            for window in windows {
                if !deficit(&counts, &added) {
                    break;
                }
                let snr = config.snr_choices_db[rng.gen_range(0..config.snr_choices_db.len())];
                let source = rng.gen_range(0..bank.sources.len());
                let offset = rng.gen_range(0..bank.sources[source].len());
                let copies = noisy_copies(
                    &record.signal,
                    &record.beats,
                    window,
                    params,
                    bank,
                    source,
                    offset,
                    snr,
                );
                for beat in copies {
                    // a stretch can hold both rare classes; keep a copy only
                    // while its class is still short
                    if counts[beat.class.index()] + added[beat.class.index()] < want {
                        added[beat.class.index()] += 1;
                        out.push(beat);
                        produced = true;
                    }
                }
            }
        }
        if !produced && deficit(&counts, &added) {
            let class = [AamiClass::Supraventricular, AamiClass::Ventricular]
                .into_iter()
                .find(|c| counts[c.index()] + added[c.index()] < want)
                .unwrap();
            return Err(AugmentError::Unbalanced {
                class,
                have: counts[class.index()] + added[class.index()],
                want,
                passes,
            });
        }
    }
    let final_counts = [
        counts[0] + added[0],
        counts[1] + added[1],
        counts[2] + added[2],
    ];
    Ok((
        out,
        AugmentStats {
            windows: total_windows,
            passes,
            added,
            final_counts,
        },
    ))
}
