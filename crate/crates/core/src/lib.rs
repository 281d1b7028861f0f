//! Feasibility studies for classification datasets.
//!
//! Given precomputed feature transformations of a labelled dataset, the
//! crate estimates the Bayes error rate with nearest-neighbour based lower
//! bounds, schedules the work across transformations with successive
//! halving, and decides whether a target accuracy is realistic.

pub mod datamodel;
pub mod estimator;
pub mod knn;
pub mod noise;
pub mod scheduler;
pub mod study;
pub mod synth;
pub mod whatif;

pub use datamodel::{
    load_manifest, read_embedding_file, read_label_file, Budget, DataError, DatasetSplit, EmbeddingMatrix, LabelVector,
    Metric, Strategy, StudyManifest,
};
pub use estimator::{BerEstimate, StudyResult, Verdict};
pub use knn::{ArmState, CurvePoint};
pub use study::{run_study, StudyData, StudyError, StudyOutcome};
