//! Wavelet scalograms of beat windows.
//!
//! Each beat window is correlated with a Ricker (Mexican-hat) wavelet at a
//! bank of scales chosen so the discrete wavelet's spectral peak lands on
//! round frequency targets. The result, one row per scale, is the image the
//! classifier consumes.

mod packed;

pub use packed::{read_packed, write_packed, PackedBeat, PackedBeatInfo, PackedError, PackedHeader};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::Tensor;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("{0}")]
    Empty(String),
    #[error("signal is constant (standard deviation {std}), cannot normalize")]
    Degenerate { std: f64 },
    #[error("band {hz} Hz is not resolvable at {fs} Hz sampling")]
    BadBand { hz: f64, fs: f64 },
    #[error("scale refinement for {hz} Hz did not bracket the target")]
    NoBracket { hz: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

/// Spectral peak of the continuous wavelet in cycles per unit time,
/// `sqrt(2) / (2 pi)`. Scale `a` at sampling rate `fs` concentrates on
/// `CENTER_FREQ * fs / a` hertz.
pub const CENTER_FREQ: f64 = std::f64::consts::SQRT_2 / (2.0 * PI);

/// The Ricker wavelet, unit L2 norm: `(2 / (sqrt(3) pi^(1/4))) (1 - t^2)
/// exp(-t^2 / 2)`.
pub fn ricker(t: f64) -> f64 {
    let norm = 2.0 / (3.0f64.sqrt() * PI.powf(0.25));
    norm * (1.0 - t * t) * (-0.5 * t * t).exp()
}

/// Analytic scale placing the continuous spectral peak at `hz`.
pub fn scale_for_frequency(hz: f64, fs: f64) -> f64 {
    CENTER_FREQ * fs / hz
}

/// Continuous-model peak frequency of scale `a` in hertz.
pub fn pseudo_frequency(scale: f64, fs: f64) -> f64 {
    CENTER_FREQ * fs / scale
}

/// The sampled wavelet at scale `a` (in samples): taps for offsets
/// `-n ..= n` with `n = ceil(halfwidth * a)`, including the `1 / sqrt(a)`
/// energy factor.
fn sampled_taps(scale: f64, halfwidth: f64) -> Vec<f64> {
    let n = (halfwidth * scale).ceil() as i64;
    let inv_sqrt = 1.0 / scale.sqrt();
    (-n..=n).map(|d| ricker(d as f64 / scale) * inv_sqrt).collect()
}

/// Magnitude of the sampled, truncated wavelet's transform at `hz` via the
/// even-symmetry cosine form.
fn dtft_magnitude(taps: &[f64], hz: f64, fs: f64) -> f64 {
    debug_assert_eq!(taps.len() % 2, 1);
    let n = taps.len() / 2;
    let mut acc = taps[n];
    let w = 2.0 * PI * hz / fs;
    for d in 1..=n {
        acc += 2.0 * taps[n + d] * (w * d as f64).cos();
    }
    acc.abs()
}

/// Frequency (hertz) where the discrete wavelet at `scale` peaks, by
/// golden-section search around the analytic estimate.
fn discrete_peak_frequency(scale: f64, fs: f64, halfwidth: f64) -> f64 {
    let taps = sampled_taps(scale, halfwidth);
    let estimate = pseudo_frequency(scale, fs);
    let mut lo = (estimate * 0.3).max(1e-3);
    let mut hi = (estimate * 3.0).min(fs / 2.0);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = dtft_magnitude(&taps, x1, fs);
    let mut f2 = dtft_magnitude(&taps, x2, fs);
    for _ in 0..120 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = dtft_magnitude(&taps, x2, fs);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = dtft_magnitude(&taps, x1, fs);
        }
    }
    (lo + hi) / 2.0
}

/// The wavelet bank: target bands, refined scales, and the truncation
/// halfwidth (support runs to `halfwidth * scale` samples each side).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub fs: f64,
    pub halfwidth: f64,
    pub bands_hz: Vec<f64>,
    pub scales: Vec<f64>,
}

impl WaveletSpec {
    /// Scales whose discrete spectral peaks land on the given bands. Starting
    /// from the analytic scale, each is refined by bisection because sampling
    /// and truncation shift the peak slightly, most visibly at sub-sample
    /// scales.
    pub fn for_bands(fs: f64, bands_hz: &[f64], halfwidth: f64) -> Result<Self, DspError> {
        if bands_hz.is_empty() {
            return Err(DspError::Empty("no frequency bands".into()));
        }
        let mut scales = Vec::with_capacity(bands_hz.len());
        for &hz in bands_hz {
            if !(hz > 0.0 && hz < fs / 2.0) {
                return Err(DspError::BadBand { hz, fs });
            }
            let estimate = scale_for_frequency(hz, fs);
            let mut lo = estimate / 2.0;
            let mut hi = estimate * 2.0;
            // peak frequency falls as scale grows
            if discrete_peak_frequency(lo, fs, halfwidth) < hz
                || discrete_peak_frequency(hi, fs, halfwidth) > hz
            {
                return Err(DspError::NoBracket { hz });
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if discrete_peak_frequency(mid, fs, halfwidth) > hz {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            scales.push(0.5 * (lo + hi));
        }
        Ok(Self {
            fs,
            halfwidth,
            bands_hz: bands_hz.to_vec(),
            scales,
        })
    }

    /// The production bank: 10 through 90 hertz in 10-hertz steps, support
    /// cut at six scale lengths per side.
    pub fn default_for_fs(fs: f64) -> Result<Self, DspError> {
        let bands: Vec<f64> = (1..=9).map(|i| 10.0 * i as f64).collect();
        Self::for_bands(fs, &bands, 6.0)
    }
}

/// A beat window transformed to one row per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub scales: Vec<f64>,
    pub fs: f64,
    pub data: Tensor,
}

impl Scalogram {
    /// Comma-separated values, one line per scale row in bank order.
    pub fn to_csv(&self) -> String {
        let (rows, cols) = (self.scales.len(), self.data.len() / self.scales.len());
        let mut out = String::new();
        for r in 0..rows {
            let row = &self.data.data()[r * cols..(r + 1) * cols];
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Correlate a signal with the wavelet bank:
/// `W[s][b] = (1 / sqrt(a_s)) * sum_d x[b + d] * psi(d / a_s)` with the sum
/// truncated to `|d| <= ceil(halfwidth * a_s)` and the signal zero outside
/// its bounds.
pub fn cwt(x: &[f64], spec: &WaveletSpec) -> Result<Scalogram, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty("empty signal".into()));
    }
    if spec.scales.is_empty() {
        return Err(DspError::Empty("empty scale bank".into()));
    }
    let l = x.len();
    let mut data = vec![0.0; spec.scales.len() * l];
    for (s, &scale) in spec.scales.iter().enumerate() {
        let taps = sampled_taps(scale, spec.halfwidth);
        let n = (taps.len() / 2) as i64;
        let row = &mut data[s * l..(s + 1) * l];
        for (b, slot) in row.iter_mut().enumerate() {
            let b = b as i64;
            let d_lo = (-n).max(-b);
            let d_hi = n.min(l as i64 - 1 - b);
            let mut acc = 0.0;
            for d in d_lo..=d_hi {
                acc += x[(b + d) as usize] * taps[(d + n) as usize];
            }
            *slot = acc;
        }
    }
    let data = Tensor::from_vec(&[spec.scales.len(), l], data);
    if !data.all_finite() {
        return Err(DspError::NonFinite("scalogram".into()));
    }
    Ok(Scalogram {
        scales: spec.scales.clone(),
        fs: spec.fs,
        data,
    })
}

/// A record's signal brought to zero mean and unit variance, with the
/// statistics kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSignal {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Standardize a whole record. A constant signal has no scale to divide by
/// and is rejected.
pub fn normalize_record(x: &[f64]) -> Result<NormalizedSignal, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty("empty signal".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !std.is_finite() || std == 0.0 {
        return Err(DspError::Degenerate { std });
    }
    Ok(NormalizedSignal {
        samples: x.iter().map(|v| (v - mean) / std).collect(),
        mean,
        std,
    })
}

/// Per-scale-row standardization statistics, fitted on training scalograms
/// only and then applied unchanged everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScaleStats {
    /// Fit per-row mean and standard deviation across a set of equally shaped
    /// `[rows, cols]` scalogram tensors. Constant rows get unit scale.
    pub fn fit<'a>(scalograms: impl IntoIterator<Item = &'a Tensor> + Clone) -> Result<Self, DspError> {
        let mut iter = scalograms.clone().into_iter();
        let first = iter.next().ok_or_else(|| DspError::Empty("no scalograms".into()))?;
        let rows = first.shape()[0];
        let cols = first.shape()[1];
        let mut mean = vec![0.0; rows];
        let mut count = 0usize;
        for t in scalograms.clone() {
            assert_eq!(t.shape(), [rows, cols], "scalogram shapes must agree");
            for r in 0..rows {
                mean[r] += t.row(r).iter().sum::<f64>();
            }
            count += 1;
        }
        let n = (count * cols) as f64;
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; rows];
        for t in scalograms {
            for r in 0..rows {
                std[r] += t.row(r).iter().map(|v| (v - mean[r]) * (v - mean[r])).sum::<f64>();
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

    pub fn apply(&self, scalogram: &mut Tensor) {
        let rows = self.mean.len();
        let cols = scalogram.len() / rows;
        for r in 0..rows {
            let (m, s) = (self.mean[r], self.std[r]);
            for v in &mut scalogram.data_mut()[r * cols..(r + 1) * cols] {
                *v = (*v - m) / s;
            }
        }
    }
}
