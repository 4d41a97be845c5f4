//! Binary annotation streams.
//!
//! The stream is a sequence of 16-bit little-endian words. The top 6 bits
//! carry a type code, the low 10 bits a payload. Event words advance time by
//! their payload and emit an annotation; a few special codes extend the time
//! delta, attach metadata to the latest annotation, or switch persistent
//! fields for the annotations that follow.

use super::WfdbError;

/// One annotation: a typed mark at a sample position, with the auxiliary
/// fields carried by the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationEvent {
    pub sample: u64,
    pub code: u8,
    pub symbol: char,
    pub sub: i8,
    pub chan: u8,
    pub num: u8,
    pub aux: Option<String>,
}

impl AnnotationEvent {
    /// Event with default metadata, if the symbol is known.
    pub fn at(sample: u64, symbol: char) -> Option<Self> {
        let code = symbol_to_code(symbol)?;
        Some(Self {
            sample,
            code,
            symbol,
            sub: 0,
            chan: 0,
            num: 0,
            aux: None,
        })
    }
}

const CODE_END: u16 = 0;
const CODE_SKIP: u16 = 59;
const CODE_NUM: u16 = 60;
const CODE_SUB: u16 = 61;
const CODE_CHN: u16 = 62;
const CODE_AUX: u16 = 63;

/// Printable symbol for an annotation type code.
pub fn code_to_symbol(code: u8) -> Option<char> {
    Some(match code {
        1 => 'N',
        2 => 'L',
        3 => 'R',
        4 => 'a',
        5 => 'V',
        6 => 'F',
        7 => 'J',
        8 => 'A',
        9 => 'S',
        10 => 'E',
        11 => 'j',
        12 => '/',
        13 => 'Q',
        14 => '~',
        16 => '|',
        18 => 's',
        19 => 'T',
        20 => '*',
        21 => 'D',
        22 => '"',
        23 => '=',
        24 => 'p',
        25 => 'B',
        26 => '^',
        27 => 't',
        28 => '+',
        29 => 'u',
        30 => '?',
        31 => '!',
        32 => '[',
        33 => ']',
        34 => 'e',
        35 => 'n',
        36 => '@',
        37 => 'x',
        38 => 'f',
        39 => '(',
        40 => ')',
        41 => 'r',
        _ => return None,
    })
}

pub fn symbol_to_code(symbol: char) -> Option<u8> {
    (1..=49).find(|&c| code_to_symbol(c) == Some(symbol))
}

/// Whether the symbol marks a heartbeat, as opposed to rhythm changes, signal
/// quality notes, and other non-beat marks.
pub fn is_beat_symbol(symbol: char) -> bool {
    matches!(
        symbol,
        'N' | 'L' | 'R' | 'a' | 'V' | 'F' | 'J' | 'A' | 'S' | 'E' | 'j' | '/' | 'Q' | 'B' | '!'
            | 'e' | 'n' | 'f' | 'r'
    )
}

fn ann_err(offset: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::Annotation {
        offset,
        reason: reason.into(),
    }
}

fn enc_err(index: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::AnnotationEncode {
        index,
        reason: reason.into(),
    }
}

pub fn parse_annotations(bytes: &[u8]) -> Result<Vec<AnnotationEvent>, WfdbError> {
    let mut events: Vec<AnnotationEvent> = Vec::new();
    let mut time: i64 = 0;
    let mut skip_pending: i64 = 0;
    let mut cur_chan: u8 = 0;
    let mut cur_num: u8 = 0;
    let mut at = 0usize;

    let read_word = |at: &mut usize| -> Result<u16, WfdbError> {
        let b = bytes
            .get(*at..*at + 2)
            .ok_or_else(|| ann_err(*at, "stream ends mid-word"))?;
        *at += 2;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    };

    loop {
        let start = at;
        let word = read_word(&mut at)?;
        let code = word >> 10;
        let payload = word & 0x3FF;
        match code {
            CODE_END => {
                if payload != 0 {
                    return Err(ann_err(start, format!("end marker with payload {payload}")));
                }
                return Ok(events);
            }
            CODE_SKIP => {
                if payload != 0 {
                    return Err(ann_err(start, format!("skip with payload {payload}")));
                }
                let high = read_word(&mut at)? as u32;
                let low = read_word(&mut at)? as u32;
                skip_pending += ((high << 16) | low) as i32 as i64;
            }
            CODE_NUM => {
                cur_num = (payload & 0xFF) as u8;
                match events.last_mut() {
                    Some(e) => e.num = cur_num,
                    None => return Err(ann_err(start, "num change before any annotation")),
                }
            }
            CODE_SUB => match events.last_mut() {
                Some(e) => e.sub = (payload & 0xFF) as u8 as i8,
                None => return Err(ann_err(start, "subtype before any annotation")),
            },
            CODE_CHN => {
                cur_chan = (payload & 0xFF) as u8;
                match events.last_mut() {
                    Some(e) => e.chan = cur_chan,
                    None => return Err(ann_err(start, "channel change before any annotation")),
                }
            }
            CODE_AUX => {
                let len = payload as usize;
                let padded = len + (len & 1);
                let data = bytes
                    .get(at..at + len)
                    .ok_or_else(|| ann_err(at, "aux data runs past the stream"))?;
                let text = String::from_utf8_lossy(data)
                    .trim_end_matches('\0')
                    .to_string();
                at += padded;
                match events.last_mut() {
                    Some(e) => e.aux = Some(text),
                    None => return Err(ann_err(start, "aux data before any annotation")),
                }
            }
            1..=49 => {
                let symbol = code_to_symbol(code as u8)
                    .ok_or_else(|| ann_err(start, format!("unknown annotation code {code}")))?;
                time += skip_pending + payload as i64;
                skip_pending = 0;
                if time < 0 {
                    return Err(ann_err(start, format!("annotation time went negative ({time})")));
                }
                events.push(AnnotationEvent {
                    sample: time as u64,
                    code: code as u8,
                    symbol,
                    sub: 0,
                    chan: cur_chan,
                    num: cur_num,
                    aux: None,
                });
            }
            other => {
                return Err(ann_err(start, format!("unsupported code {other}")));
            }
        }
    }
}

/// Serialize annotations, which must be sorted by sample. Deltas that exceed
/// the 10-bit payload are carried by a skip word holding the full difference,
/// with the event word contributing zero.
pub fn encode_annotations(events: &[AnnotationEvent]) -> Result<Vec<u8>, WfdbError> {
    fn put(out: &mut Vec<u8>, word: u16) {
        out.extend_from_slice(&word.to_le_bytes());
    }
    let mut out = Vec::new();
    let mut prev_time: u64 = 0;
    let mut cur_chan: u8 = 0;
    let mut cur_num: u8 = 0;

    for (i, e) in events.iter().enumerate() {
        if code_to_symbol(e.code) != Some(e.symbol) {
            return Err(enc_err(
                i,
                format!("code {} does not describe symbol {:?}", e.code, e.symbol),
            ));
        }
        if e.sample < prev_time {
            return Err(enc_err(
                i,
                format!("annotations out of order at sample {}", e.sample),
            ));
        }
        let delta = e.sample - prev_time;
        prev_time = e.sample;
        if delta > 0x3FF {
            let delta = i32::try_from(delta).map_err(|_| {
                enc_err(i, format!("gap of {delta} samples does not fit a skip word"))
            })?;
            put(&mut out, CODE_SKIP << 10);
            put(&mut out, (delta as u32 >> 16) as u16);
            put(&mut out, (delta as u32 & 0xFFFF) as u16);
            put(&mut out, (e.code as u16) << 10);
        } else {
            put(&mut out, ((e.code as u16) << 10) | delta as u16);
        }
        if e.sub != 0 {
            put(&mut out, (CODE_SUB << 10) | (e.sub as u8 as u16));
        }
        if e.chan != cur_chan {
            cur_chan = e.chan;
            put(&mut out, (CODE_CHN << 10) | e.chan as u16);
        }
        if e.num != cur_num {
            cur_num = e.num;
            put(&mut out, (CODE_NUM << 10) | e.num as u16);
        }
        if let Some(aux) = &e.aux {
            if aux.len() > 0x3FF {
                return Err(enc_err(i, format!("aux text of {} bytes too long", aux.len())));
            }
            put(&mut out, (CODE_AUX << 10) | aux.len() as u16);
            out.extend_from_slice(aux.as_bytes());
            if aux.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    put(&mut out, 0);
    Ok(out)
}
