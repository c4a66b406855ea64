use thiserror::Error;

/// Errors produced by binning and the event file format.
#[derive(Debug, Error)]
pub enum EventError {
    /// An in-window event lies outside the target grid.
    #[error("event {index} at ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfGrid {
        index: usize,
        x: u16,
        y: u16,
        width: usize,
        height: usize,
    },

    /// Window length or bin count is zero.
    #[error("invalid window: dt={dt_us}us, B={bins} (both must be >= 1)")]
    InvalidWindow { dt_us: u64, bins: usize },

    /// The file does not start with the expected magic bytes.
    #[error("bad magic: expected \"TOFE\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    /// The file declares a format version this build does not understand.
    #[error("unsupported event file version {0}")]
    UnsupportedVersion(u32),

    /// The file ended before the declared record count was read.
    #[error("truncated event file: expected {expected} records, got {got}")]
    Truncated { expected: u64, got: u64 },

    /// Record `index` has a smaller timestamp than its predecessor.
    #[error("unsorted timestamps at record {index}: {t} < {prev}")]
    UnsortedTimestamps { index: usize, t: u64, prev: u64 },

    /// Record `index` carries a polarity byte outside {0, 1}.
    #[error("invalid polarity byte {value} at record {index}")]
    BadPolarity { index: usize, value: u8 },

    /// An event's coordinates exceed the sensor size declared in the header.
    #[error("record {index} at ({x}, {y}) exceeds declared sensor size {width}x{height}")]
    RecordOutOfSensor {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
