//! Error type shared by all modules of the crate.

use std::path::PathBuf;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for tensor algebra, solvers, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition (bad shape, bad range,
    /// invalid weights, ...). The message names the offending argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two tensors (or a tensor and a mask) that must share a shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An iterative routine produced a non-finite value and was aborted.
    #[error("divergence detected: {0}")]
    Diverged(String),

    /// A singular value decomposition failed to converge.
    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    /// An inverse DFT was asked to produce a real tensor from a spectrum
    /// whose conjugate symmetry is broken beyond the accepted tolerance.
    #[error(
        "spectrum is not conjugate-symmetric: residual imaginary magnitude {residual:.3e} \
         exceeds {tolerance:.3e}"
    )]
    CorruptSpectrum { residual: f64, tolerance: f64 },

    /// A tensor file did not start with the expected `FFMT` magic bytes.
    #[error("{path}: not a tensor file (bad magic bytes)")]
    BadMagic { path: PathBuf },

    /// A tensor file declared an unsupported format version.
    #[error("{path}: unsupported tensor file version {version} (expected 1)")]
    BadVersion { path: PathBuf, version: u32 },

    /// A tensor file declared an unsupported element type code.
    #[error("{path}: unsupported dtype code {dtype} (expected 0 = f64 little-endian)")]
    BadDtype { path: PathBuf, dtype: u8 },

    /// A tensor file ended before the declared payload was complete.
    #[error("{path}: truncated tensor file ({expected} bytes expected, {actual} present)")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    /// A tensor file has bytes after the declared payload.
    #[error("{path}: trailing bytes after tensor payload")]
    TrailingData { path: PathBuf },

    /// An underlying I/O operation failed.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
