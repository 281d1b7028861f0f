//! From 1NN errors to a feasibility verdict.

mod aggregate;
mod cover_hart;
mod extrapolate;

use thiserror::Error;

pub use aggregate::{aggregate_min, decide, BerEstimate, StudyResult, Verdict, DECISION_SLACK};
pub use cover_hart::{cover_hart_lower_bound, invert_cover_hart};
pub use extrapolate::{
    fit_loglinear, fit_loglinear_window, samples_to_target, ExtrapolationFit, SamplesToTarget, DEFAULT_TRUST_FACTOR,
    DEFAULT_WINDOW,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("class count {0} < 2")]
    InvalidClassCount(u32),
    #[error("value {value} outside [0, {max}]")]
    OutOfRange { value: f64, max: f64 },
    #[error("no estimates to aggregate")]
    EmptyInput,
    #[error("need at least 2 usable curve points, have {0}")]
    InsufficientPoints(usize),
    #[error("only {remaining} curve points left after dropping zero-error points")]
    ZeroErrorPoint { remaining: usize },
    #[error("fit has non-positive decay rate {0}")]
    DegenerateFit(f64),
}
