//! Text header parsing.
//!
//! A header names the record, its sampling frequency and length, and one line
//! per signal with storage format and calibration. Fields beyond the ones the
//! pipeline needs are tolerated and ignored, since headers in the wild carry
//! optional suffixes on almost every field.

use super::WfdbError;

/// One signal description line.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u32,
    /// ADC units per physical millivolt; the conventional default when the
    /// header says zero.
    pub gain: f64,
    /// Sample value corresponding to zero physical amplitude. Falls back to
    /// `adc_zero` when the header does not set it explicitly.
    pub baseline: i32,
    pub adc_zero: i32,
    /// Expected first sample, used to cross-check the signal file.
    pub init_value: Option<i32>,
    /// 16-bit sum of all samples of this signal, if the header records one.
    pub checksum: Option<i16>,
    pub description: String,
}

/// Parsed record header.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub name: String,
    pub fs: f64,
    pub n_samples: u64,
    pub signals: Vec<SignalSpec>,
}

const DEFAULT_GAIN: f64 = 200.0;
const DEFAULT_FS: f64 = 250.0;

/// Leading numeric part of a field that may carry suffixes like `360/360`,
/// `200(1024)/mV`, or `212x2`.
fn leading_number(field: &str) -> &str {
    let end = field
        .char_indices()
        .find(|(i, c)| !(c.is_ascii_digit() || *c == '-' || *c == '+' || (*c == '.' && *i > 0)))
        .map(|(i, _)| i)
        .unwrap_or(field.len());
    &field[..end]
}

/// Baseline given in parentheses inside the gain field, e.g. `200(1024)`.
fn parenthesized(field: &str) -> Option<&str> {
    let open = field.find('(')?;
    let close = field[open..].find(')')? + open;
    Some(&field[open + 1..close])
}

fn bad(line: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::Header {
        line,
        reason: reason.into(),
    }
}

pub fn parse_header(text: &str) -> Result<RecordHeader, WfdbError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, first) = lines.next().ok_or_else(|| bad(0, "empty header"))?;
    let fields: Vec<&str> = first.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(bad(line_no, "record line needs a name and a signal count"));
    }
    // a record name may carry a segment count after a slash
    let name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    let n_signals: usize = leading_number(fields[1])
        .parse()
        .map_err(|_| bad(line_no, format!("bad signal count {:?}", fields[1])))?;
    let fs = match fields.get(2) {
        Some(f) => {
            let lead = leading_number(f.split(['/', '(']).next().unwrap_or(f));
            lead.parse()
                .map_err(|_| bad(line_no, format!("bad sampling frequency {:?}", f)))?
        }
        None => DEFAULT_FS,
    };
    let n_samples: u64 = match fields.get(3) {
        Some(f) => leading_number(f)
            .parse()
            .map_err(|_| bad(line_no, format!("bad sample count {:?}", f)))?,
        None => 0,
    };

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| bad(0, format!("expected {} signal lines", n_signals)))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(bad(line_no, "signal line needs a file name and a format"));
        }
        let format: u32 = leading_number(fields[1])
            .parse()
            .map_err(|_| bad(line_no, format!("bad signal format {:?}", fields[1])))?;
        let gain_field = fields.get(2).copied().unwrap_or("0");
        let gain: f64 = leading_number(gain_field)
            .parse()
            .map_err(|_| bad(line_no, format!("bad gain {:?}", gain_field)))?;
        let gain = if gain == 0.0 { DEFAULT_GAIN } else { gain };
        let adc_zero: i32 = match fields.get(4) {
            Some(f) => leading_number(f)
                .parse()
                .map_err(|_| bad(line_no, format!("bad adc zero {:?}", f)))?,
            None => 0,
        };
        let baseline = match parenthesized(gain_field) {
            Some(b) => b
                .parse()
                .map_err(|_| bad(line_no, format!("bad baseline {:?}", b)))?,
            None => adc_zero,
        };
        let init_value = match fields.get(5) {
            Some(f) => Some(
                leading_number(f)
                    .parse()
                    .map_err(|_| bad(line_no, format!("bad initial value {:?}", f)))?,
            ),
            None => None,
        };
        let checksum = match fields.get(6) {
            Some(f) => Some(
                leading_number(f)
                    .parse()
                    .map_err(|_| bad(line_no, format!("bad checksum {:?}", f)))?,
            ),
            None => None,
        };
        let description = if fields.len() > 8 {
            fields[8..].join(" ")
        } else {
            String::new()
        };
        signals.push(SignalSpec {
            file_name: fields[0].to_string(),
            format,
            gain,
            baseline,
            adc_zero,
            init_value,
            checksum,
            description,
        });
    }

    Ok(RecordHeader {
        name,
        fs,
        n_samples,
        signals,
    })
}

impl RecordHeader {
    /// Render back to header text. Only the fields this implementation uses
    /// are written, in the standard order.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.name,
            self.signals.len(),
            self.fs,
            self.n_samples
        );
        for s in &self.signals {
            let gain = if s.baseline != s.adc_zero {
                format!("{}({})", s.gain, s.baseline)
            } else {
                format!("{}", s.gain)
            };
            out.push_str(&format!(
                "{} {} {} 12 {} {} {} 0 {}\n",
                s.file_name,
                s.format,
                gain,
                s.adc_zero,
                s.init_value.unwrap_or(0),
                s.checksum.unwrap_or(0),
                s.description
            ));
        }
        out
    }
}
