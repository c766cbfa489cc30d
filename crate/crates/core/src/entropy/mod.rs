//! Lossless coding of quantized levels and the `.lfgc` container.

mod levels;
mod range;
mod stream;

use thiserror::Error;

pub use levels::{
    band_context, decode_levels, encode_levels, LevelReader, LevelWriter, BAND_CONTEXTS, MAX_PREFIX,
};
pub use range::{BitModel, RangeDecoder, RangeEncoder, ADAPT_SHIFT};
pub use stream::{
    payload_offsets, read_stream, stream_from_bytes, stream_to_bytes, write_stream, CodingParams,
    LayoutSource, StreamHeader, StreamReader, MAGIC, VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntropyError {
    #[error("stream ended before all symbols were decoded")]
    TruncatedStream,
    #[error("expected {expected} but found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("not an .lfgc stream")]
    BadMagic,
    #[error("unsupported stream version {0}")]
    VersionUnsupported(u8),
    #[error("payload offset out of range: {0}")]
    OffsetOutOfRange(String),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(String),
    #[error("malformed stream: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EntropyError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
