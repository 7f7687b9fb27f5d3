use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mask dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },

    #[error("centroid of an empty mask is undefined")]
    EmptyMask,

    #[error("run (row {row}, col {start}, len {len}) lies outside a {width}x{height} grid")]
    RunOutOfBounds {
        row: u32,
        start: u32,
        len: u32,
        width: u32,
        height: u32,
    },

    #[error("runs are not canonical (sorted, non-empty, non-touching)")]
    NonCanonicalRuns,

    #[error("bitmap has {actual} pixels, expected {expected}")]
    BitmapSize { expected: usize, actual: usize },

    #[error("invalid local track: {0}")]
    InvalidLocalTrack(String),

    #[error("temporal distance {delta_t} outside 1..={max} for tracking range {tr}")]
    NoOverlap { delta_t: i64, tr: u32, max: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("local tracks disagree on tracking range: expected {expected}, found {found}")]
    InconsistentTrackingRange { expected: u32, found: u32 },

    #[error("interpolation frame {t} is not strictly inside ({t_last}, {t_next})")]
    InterpolationRange { t: u32, t_last: u32, t_next: u32 },

    #[error("detection {detection} on frame {frame} does not belong to any ground-truth track")]
    UnknownDetection { detection: u64, frame: u32 },

    #[error("could not place object {object} without overlap after {attempts} attempts")]
    SpawnFailed { object: usize, attempts: usize },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: line {record}: {message}")]
    Record {
        path: PathBuf,
        record: usize,
        message: String,
    },

    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
