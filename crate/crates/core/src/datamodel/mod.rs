//! On-disk formats and in-memory types for embeddings, labels, splits and
//! study manifests.
//!
//! Two binary formats are supported, both little-endian:
//!
//! ```text
//! SNPE  "SNPE" | version u32 = 1 | n_rows u64 | dim u64 | dtype u8 = 0 | 7 zero bytes | f32 * n_rows*dim
//! SNPL  "SNPL" | version u32 = 1 | n u64     | classes u32                          | u32 * n
//! ```
//!
//! Any path ending in `.csv` is read as header-less comma separated text
//! instead, which is convenient for small hand-written fixtures.

mod curves;
mod embedding;
mod labels;
mod manifest;
mod split;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use curves::{curves_to_csv_string, parse_curves_csv, CurveSeries, CURVES_HEADER};
pub use embedding::{
    probe_embedding_shape, read_embedding_file, write_embedding_file, EmbeddingMatrix, SNPE_HEADER_LEN, SNPE_MAGIC,
};
pub use labels::{
    probe_label_shape, read_label_file, write_label_file, EditRecord, LabelVector, SNPL_HEADER_LEN, SNPL_MAGIC,
};
pub use manifest::{load_manifest, Budget, Metric, Strategy, StudyManifest, TransformationSpec};
pub use split::DatasetSplit;

/// Format version written and accepted by both binary formats.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad magic bytes, expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("unsupported dtype tag {0}")]
    UnsupportedDtype(u8),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("non-finite value at flat index {0}")]
    NonFiniteValue(usize),
    #[error("label {label} at index {index} is outside [0, {classes})")]
    LabelOutOfRange { index: usize, label: u64, classes: u32 },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("shape mismatch for transformation {transformation_id}: {detail}")]
    ShapeMismatch { transformation_id: String, detail: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("target accuracy {0} is outside (0, 1]")]
    InvalidTarget(f64),
    #[error("batch fraction {0} is outside (0, 1]")]
    InvalidBatchFraction(f64),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            return DataError::MissingFile(path.into());
        }
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn is_csv(path: &std::path::Path) -> bool {
    path.extension()
        .map(|ext| ext.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

/// Minimal little-endian cursor over an in-memory buffer.
pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteCursor { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, expected_total: u64) -> Result<&'a [u8], DataError> {
        if self.bytes.len() - self.pos < n {
            return Err(DataError::TruncatedFile {
                expected: expected_total,
                found: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u32(&mut self, expected_total: u64) -> Result<u32, DataError> {
        let b = self.take(4, expected_total)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn u64(&mut self, expected_total: u64) -> Result<u64, DataError> {
        let b = self.take(8, expected_total)?;
        let mut buf = [0u8; 8];
        buf.copy_from_slice(b);
        Ok(u64::from_le_bytes(buf))
    }

    pub(crate) fn u8(&mut self, expected_total: u64) -> Result<u8, DataError> {
        Ok(self.take(1, expected_total)?[0])
    }

    pub(crate) fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}
