//! Self-labeled synthetic recordings.
//!
//! Generates a small corpus of archive-format records whose beat classes are
//! known by construction, so the whole pipeline can be exercised end to end
//! without any real data. Each simulated patient has their own rhythm,
//! amplitude, and ectopy rates. Normal beats are regular and upright;
//! supraventricular ectopics arrive early on a narrow complex; ventricular
//! ectopics are wide, inverted, and followed by a compensatory pause.


use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wfdb::{
    encode_annotations, write_record, AnnotationEvent, RawRecord, RecordHeader, SignalSpec,
    WfdbError,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Wfdb(#[from] WfdbError),
    #[error("synthetic io at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("synthetic manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// Corpus shape: how many simulated patients, how long each recording runs,
/// and the seed every patient parameter derives from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub records: usize,
    pub seconds: f64,
    pub fs: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            records: 12,
            seconds: 180.0,
            fs: 360.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.records < 2 {
            return Err(SynthError::BadConfig(
                "need at least two records for a held-out split".into(),
            ));
        }
        if !(self.seconds >= 10.0) {
            return Err(SynthError::BadConfig(
                "each record needs at least ten seconds".into(),
            ));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(SynthError::BadConfig("sampling rate must be positive".into()));
        }
        Ok(())
    }
}

/// What was written: the split and the class counts over the whole corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub train: Vec<String>,
    pub eval: Vec<String>,
    /// Annotated beats per class in N, S, V order, before any segmentation.
    pub beat_counts: [usize; 3],
}

/// One simulated patient's physiology.
struct Patient {
    /// Resting interval between beats, seconds.
    rr0: f64,
    /// R-wave amplitude, millivolts.
    amp: f64,
    /// Gaussian width of the normal complex, seconds.
    width: f64,
    p_s: f64,
    p_v: f64,
    wander_amp: f64,
    wander_freq: f64,
    wander_phase: f64,
    noise_amp: f64,
}

impl Patient {
    fn draw(rng: &mut ChaCha20Rng) -> Self {
        Self {
            rr0: rng.gen_range(0.7..0.95),
            amp: rng.gen_range(0.9..1.15),
            width: rng.gen_range(0.018..0.024),
            p_s: rng.gen_range(0.05..0.12),
            p_v: rng.gen_range(0.05..0.12),
            wander_amp: rng.gen_range(0.04..0.1),
            wander_freq: rng.gen_range(0.2..0.35),
            wander_phase: rng.gen_range(0.0..std::f64::consts::TAU),
            noise_amp: rng.gen_range(0.01..0.02),
        }
    }
}

/// Normal complex: P wave, narrow upright R, small S dip, T wave.
fn normal_complex(t: f64, amp: f64, width: f64) -> f64 {
    let g = |center: f64, sigma: f64| {
        let u = (t - center) / sigma;
        (-0.5 * u * u).exp()
    };
    amp * g(0.0, width) + 0.12 * amp * g(-0.18, 0.025) - 0.14 * amp * g(0.05, 0.02)
        + 0.3 * amp * g(0.3, 0.06)
}

/// Early atrial complex: the same narrow shape, slightly smaller, with the
/// P wave riding closer to the R.
fn atrial_complex(t: f64, amp: f64, width: f64) -> f64 {
    let g = |center: f64, sigma: f64| {
        let u = (t - center) / sigma;
        (-0.5 * u * u).exp()
    };
    0.92 * amp * g(0.0, width) + 0.14 * amp * g(-0.11, 0.022) - 0.13 * amp * g(0.05, 0.02)
        + 0.27 * amp * g(0.28, 0.06)
}

/// Ventricular complex: three times wider, inverted, no P wave, discordant
/// T wave.
fn ventricular_complex(t: f64, amp: f64, width: f64) -> f64 {
    let g = |center: f64, sigma: f64| {
        let u = (t - center) / sigma;
        (-0.5 * u * u).exp()
    };
    -1.25 * amp * g(0.0, 3.0 * width) + 0.45 * amp * g(0.35, 0.08)
}

const GAIN: f64 = 200.0;
const BASELINE: i32 = 1024;
/// Waveform support around the R peak, seconds.
const COMPLEX_SPAN: f64 = 0.5;

/// Build one record: the beat schedule, the sampled signal in archive units,
/// and the annotation stream (a rhythm label first, then one event per beat).
pub fn generate_record(
    name: &str,
    config: &SynthConfig,
    rng: &mut ChaCha20Rng,
) -> (RawRecord, Vec<AnnotationEvent>) {
    let patient = Patient::draw(rng);
    let n_samples = (config.seconds * config.fs).round() as usize;

    // schedule: prematurity shortens the interval before an ectopic, a
    // compensatory pause stretches the one after a ventricular beat
    let mut schedule: Vec<(f64, char)> = Vec::new();
    let mut t = 1.0;
    let mut recover = 0.0;
    let (mut seen_s, mut seen_v) = (false, false);
    schedule.push((t, 'N'));
    loop {
        let roll: f64 = rng.gen_range(0.0..1.0);
        let mut kind = if roll < patient.p_v {
            'V'
        } else if roll < patient.p_v + patient.p_s {
            'A'
        } else {
            'N'
        };
        // every record must offer both rare classes; force one late if the
        // dice never did
        if t > 0.6 * config.seconds {
            if !seen_s {
                kind = 'A';
            } else if !seen_v {
                kind = 'V';
            }
        }
        let interval = match kind {
            'A' => 0.55 * patient.rr0,
            'V' => 0.65 * patient.rr0,
            _ => patient.rr0 * rng.gen_range(0.97..1.03) + recover,
        };
        recover = match kind {
            'A' => 0.15 * patient.rr0,
            'V' => 0.35 * patient.rr0,
            _ => 0.0,
        };
        if t + interval >= config.seconds - 1.0 {
            break;
        }
        t += interval;
        match kind {
            'A' => seen_s = true,
            'V' => seen_v = true,
            _ => {}
        }
        schedule.push((t, kind));
    }

    // baseline wander plus measurement hash, then each complex added in
    let mut physical = vec![0.0; n_samples];
    for (i, v) in physical.iter_mut().enumerate() {
        let time = i as f64 / config.fs;
        *v = patient.wander_amp
            * (std::f64::consts::TAU * patient.wander_freq * time + patient.wander_phase).sin()
            + rng.gen_range(-patient.noise_amp..patient.noise_amp);
    }
    for &(beat_time, kind) in &schedule {
        let lo = ((beat_time - COMPLEX_SPAN) * config.fs).floor().max(0.0) as usize;
        let hi = (((beat_time + COMPLEX_SPAN) * config.fs).ceil() as usize).min(n_samples);
        for (i, v) in physical.iter_mut().enumerate().take(hi).skip(lo) {
            let dt = i as f64 / config.fs - beat_time;
            *v += match kind {
                'A' => atrial_complex(dt, patient.amp, patient.width),
                'V' => ventricular_complex(dt, patient.amp, patient.width),
                _ => normal_complex(dt, patient.amp, patient.width),
            };
        }
    }
    let samples: Vec<i32> = physical
        .iter()
        .map(|v| ((v * GAIN).round() as i32 + BASELINE).clamp(-2048, 2047))
        .collect();

    let header = RecordHeader {
        name: name.to_string(),
        fs: config.fs,
        n_samples: n_samples as u64,
        signals: vec![SignalSpec {
            file_name: format!("{name}.dat"),
            format: 212,
            gain: GAIN,
            baseline: BASELINE,
            adc_zero: BASELINE,
            init_value: None,
            checksum: None,
            description: "synthetic lead".to_string(),
        }],
    };

    let mut events = Vec::with_capacity(schedule.len() + 1);
    let mut rhythm = AnnotationEvent::at(6, '+').unwrap();
    rhythm.aux = Some("(N".to_string());
    events.push(rhythm);
    for &(beat_time, kind) in &schedule {
        let sample = (beat_time * config.fs).round() as u64;
        events.push(AnnotationEvent::at(sample, kind).unwrap());
    }
    (
        RawRecord {
            header,
            channels: vec![samples],
        },
        events,
    )
}

/// Write the whole corpus: signal and annotation files per record, the
/// record list, and a split manifest that alternates patients between train
/// and eval halves.
pub fn write_synth_dataset(dir: &Path, config: &SynthConfig) -> Result<SynthManifest, SynthError> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|source| SynthError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names = Vec::with_capacity(config.records);
    let mut counts = [0usize; 3];
    for index in 0..config.records {
        let name = format!("s{index:02}");
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(index as u64));
        let (record, events) = generate_record(&name, config, &mut rng);
        write_record(dir, &record)?;
        let stream = encode_annotations(&events)?;
        let path = dir.join(format!("{name}.atr"));
        fs::write(&path, stream).map_err(|source| SynthError::Io { path, source })?;
        for event in &events {
            if let Some(class) = crate::beats::AamiClass::from_symbol(event.symbol) {
                counts[class.index()] += 1;
            }
        }
        names.push(name);
    }
    let list = names.join("\n") + "\n";
    let records_path = dir.join("RECORDS");
    fs::write(&records_path, list).map_err(|source| SynthError::Io {
        path: records_path,
        source,
    })?;
    let manifest = SynthManifest {
        train: names.iter().step_by(2).cloned().collect(),
        eval: names.iter().skip(1).step_by(2).cloned().collect(),
        beat_counts: counts,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    let manifest_path = dir.join("synth_split.json");
    fs::write(&manifest_path, text).map_err(|source| SynthError::Io {
        path: manifest_path,
        source,
    })?;
    Ok(manifest)
}

/// Load a split manifest written by [`write_synth_dataset`].
pub fn read_synth_manifest(dir: &Path) -> Result<SynthManifest, SynthError> {
    let path = dir.join("synth_split.json");
    let text = fs::read(&path).map_err(|source| SynthError::Io { path, source })?;
    Ok(serde_json::from_slice(&text)?)
}
