//! Reading and writing annotated recordings in the archive layout used by
//! the public arrhythmia databases: a text header per record, a packed
//! 12-bit signal file, and a compact binary annotation stream.

mod annotation;
mod header;
mod signal;

pub use annotation::{
    code_to_symbol, encode_annotations, is_beat_symbol, parse_annotations, symbol_to_code,
    AnnotationEvent,
};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use signal::{
    adu_to_physical, decode_format_212, encode_format_212, read_record, read_records_list,
    write_record, RawRecord,
};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WfdbError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("header line {line}: {reason}")]
    Header { line: usize, reason: String },
    #[error("record {record}: {reason}")]
    Record { record: String, reason: String },
    #[error("signal file {path}: {reason}")]
    Signal { path: PathBuf, reason: String },
    #[error("annotation stream at byte {offset}: {reason}")]
    Annotation { offset: usize, reason: String },
    #[error("annotation {index} not encodable: {reason}")]
    AnnotationEncode { index: usize, reason: String },
    #[error("sample {value} outside the 12-bit range -2048..=2047")]
    SampleRange { value: i32 },
    #[error(
        "checksum mismatch on {record} channel {channel}: header {expected}, data {actual}"
    )]
    Checksum {
        record: String,
        channel: usize,
        expected: i16,
        actual: i16,
    },
}
