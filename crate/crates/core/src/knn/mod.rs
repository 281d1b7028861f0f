//! Streaming 1-nearest-neighbour error computation.
//!
//! Each transformation is an arm whose training rows are consumed in
//! batches. After every batch the arm knows, for each test point, the
//! closest training row seen so far. That single index per test point is
//! all that is needed to recompute the error after labels change.

mod arm;
mod codec;
mod distance;

use thiserror::Error;

pub use crate::datamodel::Metric;
pub use arm::{
    apply_edits_to_labels, apply_label_edits, nn_error_full, ArmState, CurvePoint, LabelEdit, Nearest, Split,
};
pub use codec::{decode_arm_state, encode_arm_state, ARM_STATE_MAGIC};
pub use distance::{distance, ZERO_VECTOR_DISSIMILARITY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnnError {
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("arm {0} has consumed its whole training stream")]
    ArmFinished(String),
    #[error("batch size must be at least 1")]
    InvalidBatchSize,
    #[error("{split:?} index {index} out of range for {len} labels")]
    IndexOutOfRange { split: Split, index: usize, len: usize },
    #[error("label {label} is outside [0, {classes})")]
    LabelOutOfRange { label: u32, classes: u32 },
    #[error("class count {0} < 2")]
    InvalidClassCount(u32),
    #[error("corrupt arm state: {0}")]
    CorruptState(String),
}
