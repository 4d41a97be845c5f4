//! Packed 12-bit signal storage (format 212) and whole-record access.

use std::fs;
use std::path::{Path, PathBuf};

use super::header::{parse_header, RecordHeader};
use super::WfdbError;

/// A fully decoded record: the header plus one raw ADC sample vector per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub header: RecordHeader,
    pub channels: Vec<Vec<i32>>,
}

/// Decode format 212: every 3 bytes hold two 12-bit two's-complement samples.
/// The first sample takes byte 0 plus the low nibble of byte 1; the second
/// takes byte 2 plus the high nibble of byte 1.
pub fn decode_format_212(bytes: &[u8], total_samples: usize) -> Result<Vec<i32>, WfdbError> {
    let needed = total_samples.div_ceil(2) * 3;
    if bytes.len() < needed {
        return Err(WfdbError::Signal {
            path: PathBuf::new(),
            reason: format!(
                "{} samples need {} bytes, file holds {}",
                total_samples,
                needed,
                bytes.len()
            ),
        });
    }
    let sign_extend = |v: u16| -> i32 {
        if v & 0x800 != 0 {
            v as i32 - 4096
        } else {
            v as i32
        }
    };
    let mut out = Vec::with_capacity(total_samples);
    for group in bytes[..needed].chunks_exact(3) {
        let (b0, b1, b2) = (group[0] as u16, group[1] as u16, group[2] as u16);
        out.push(sign_extend(((b1 & 0x0F) << 8) | b0));
        if out.len() < total_samples {
            out.push(sign_extend(((b1 & 0xF0) << 4) | b2));
        }
    }
    Ok(out)
}

/// Encode samples as format 212. An odd count is padded with a zero sample to
/// complete the final 3-byte group.
pub fn encode_format_212(samples: &[i32]) -> Result<Vec<u8>, WfdbError> {
    for &v in samples {
        if !(-2048..=2047).contains(&v) {
            return Err(WfdbError::SampleRange { value: v });
        }
    }
    let mut out = Vec::with_capacity(samples.len().div_ceil(2) * 3);
    for pair in samples.chunks(2) {
        let a = (pair[0] & 0xFFF) as u16;
        let b = (pair.get(1).copied().unwrap_or(0) & 0xFFF) as u16;
        out.push((a & 0xFF) as u8);
        out.push(((a >> 8) as u8 & 0x0F) | (((b >> 8) as u8 & 0x0F) << 4));
        out.push((b & 0xFF) as u8);
    }
    Ok(out)
}

/// Raw ADC value to physical millivolts.
pub fn adu_to_physical(adu: i32, gain: f64, baseline: i32) -> f64 {
    (adu - baseline) as f64 / gain
}

fn channel_checksum(samples: &[i32]) -> i16 {
    samples
        .iter()
        .fold(0i16, |acc, &v| acc.wrapping_add(v as i16))
}

/// Read `<name>.hea` and its signal file from `dir`, de-interleave the
/// channels, and cross-check initial values and checksums against the header.
pub fn read_record(dir: &Path, name: &str) -> Result<RawRecord, WfdbError> {
    let hea_path = dir.join(format!("{name}.hea"));
    let text = fs::read_to_string(&hea_path).map_err(|source| WfdbError::Io {
        path: hea_path.clone(),
        source,
    })?;
    let header = parse_header(&text)?;
    if header.signals.is_empty() {
        return Err(WfdbError::Record {
            record: name.to_string(),
            reason: "no signals".into(),
        });
    }
    for s in &header.signals {
        if s.format != 212 {
            return Err(WfdbError::Record {
                record: name.to_string(),
                reason: format!("unsupported signal format {}", s.format),
            });
        }
        if s.file_name != header.signals[0].file_name {
            return Err(WfdbError::Record {
                record: name.to_string(),
                reason: "signals split across files are not supported".into(),
            });
        }
    }

    let dat_path = dir.join(&header.signals[0].file_name);
    let bytes = fs::read(&dat_path).map_err(|source| WfdbError::Io {
        path: dat_path.clone(),
        source,
    })?;
    let n_sig = header.signals.len();
    let total = header.n_samples as usize * n_sig;
    let interleaved = decode_format_212(&bytes, total).map_err(|e| match e {
        WfdbError::Signal { reason, .. } => WfdbError::Signal {
            path: dat_path.clone(),
            reason,
        },
        other => other,
    })?;

    let mut channels = vec![Vec::with_capacity(header.n_samples as usize); n_sig];
    for (i, &v) in interleaved.iter().enumerate() {
        channels[i % n_sig].push(v);
    }

    for (ch, (spec, samples)) in header.signals.iter().zip(&channels).enumerate() {
        if let (Some(init), Some(&first)) = (spec.init_value, samples.first()) {
            if init != first {
                return Err(WfdbError::Record {
                    record: name.to_string(),
                    reason: format!(
                        "channel {ch} starts at {first}, header says {init}"
                    ),
                });
            }
        }
        if let Some(expected) = spec.checksum {
            let actual = channel_checksum(samples);
            if expected != actual {
                return Err(WfdbError::Checksum {
                    record: name.to_string(),
                    channel: ch,
                    expected,
                    actual,
                });
            }
        }
    }

    Ok(RawRecord { header, channels })
}

/// Write a record as `<name>.hea` plus its interleaved format 212 signal
/// file. Initial values and checksums in the header are recomputed from the
/// data so the pair always reads back cleanly.
pub fn write_record(dir: &Path, record: &RawRecord) -> Result<(), WfdbError> {
    let mut header = record.header.clone();
    if header.signals.len() != record.channels.len() {
        return Err(WfdbError::Record {
            record: header.name.clone(),
            reason: format!(
                "{} signal specs but {} channels",
                header.signals.len(),
                record.channels.len()
            ),
        });
    }
    for ch in &record.channels {
        if ch.len() != header.n_samples as usize {
            return Err(WfdbError::Record {
                record: header.name.clone(),
                reason: format!(
                    "channel holds {} samples, header says {}",
                    ch.len(),
                    header.n_samples
                ),
            });
        }
    }
    for (spec, samples) in header.signals.iter_mut().zip(&record.channels) {
        spec.init_value = Some(samples.first().copied().unwrap_or(0));
        spec.checksum = Some(channel_checksum(samples));
    }

    let n_sig = record.channels.len();
    let total = header.n_samples as usize * n_sig;
    let mut interleaved = Vec::with_capacity(total);
    for i in 0..header.n_samples as usize {
        for ch in &record.channels {
            interleaved.push(ch[i]);
        }
    }
    let bytes = encode_format_212(&interleaved)?;

    let hea_path = dir.join(format!("{}.hea", header.name));
    fs::write(&hea_path, header.to_text()).map_err(|source| WfdbError::Io {
        path: hea_path,
        source,
    })?;
    let dat_path = dir.join(&header.signals[0].file_name);
    fs::write(&dat_path, bytes).map_err(|source| WfdbError::Io {
        path: dat_path,
        source,
    })?;
    Ok(())
}

/// Record names listed in `dir/RECORDS`, one per line.
pub fn read_records_list(dir: &Path) -> Result<Vec<String>, WfdbError> {
    let path = dir.join("RECORDS");
    let text = fs::read_to_string(&path).map_err(|source| WfdbError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}
