use std::fmt;

use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Absorbs the rounding in `1 - target` so that, e.g., an aggregate of 0.2
/// meets a target accuracy of 0.8.
pub const DECISION_SLACK: f64 = 1e-12;

/// Bayes error estimate for one transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub transformation_id: String,
    pub err_1nn: f64,
    pub value: f64,
    pub n_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Realistic,
    Unrealistic,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Realistic => "REALISTIC",
            Verdict::Unrealistic => "UNREALISTIC",
        })
    }
}

/// Minimum estimate and the transformation that produced it. Ties go to the
/// lexicographically smallest id.
pub fn aggregate_min(estimates: &[BerEstimate]) -> Result<(f64, &str), EstimatorError> {
    let best = estimates
        .iter()
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| a.transformation_id.cmp(&b.transformation_id))
        })
        .ok_or(EstimatorError::EmptyInput)?;
    Ok((best.value, &best.transformation_id))
}

/// REALISTIC iff `aggregate <= 1 - target_accuracy`.
pub fn decide(aggregate: f64, target_accuracy: f64) -> Verdict {
    if aggregate <= (1.0 - target_accuracy) + DECISION_SLACK {
        Verdict::Realistic
    } else {
        Verdict::Unrealistic
    }
}

/// Outcome of a feasibility study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub per_arm: Vec<BerEstimate>,
    pub aggregate: f64,
    pub winner: String,
    pub verdict: Verdict,
    pub target_accuracy: f64,
    /// Projected accuracy `1 - aggregate` minus the target.
    pub gap: f64,
}

impl StudyResult {
    pub fn from_estimates(per_arm: Vec<BerEstimate>, target_accuracy: f64) -> Result<Self, EstimatorError> {
        let (aggregate, winner) = aggregate_min(&per_arm)?;
        let winner = winner.to_string();
        Ok(StudyResult {
            aggregate,
            verdict: decide(aggregate, target_accuracy),
            gap: (1.0 - aggregate) - target_accuracy,
            winner,
            target_accuracy,
            per_arm,
        })
    }
}
