use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation, calibration and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cell ({row}, {col}) is outside a {height}x{width} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("wind schedule entry at step {step} is out of range (run has {steps} steps)")]
    ScheduleOutOfRange { step: usize, steps: usize },

    #[error("invalid landscape: {0}")]
    InvalidLandscape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("bad magic in grid file: {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported grid file version {0}")]
    UnsupportedVersion(u16),

    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),

    #[error("dtype mismatch: expected {expected}, found {found}")]
    DtypeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("truncated grid file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
