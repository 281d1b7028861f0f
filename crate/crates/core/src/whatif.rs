//! Predicted effect of cleaning part of the labels, under the uniform noise
//! model with an assumed base Bayes error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{decide, Verdict};
use crate::noise::ber_evolution_uniform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhatIfError {
    #[error("estimate {estimate} is at or above the noise ceiling {ceiling}; residual noise is undefined")]
    DegenerateModel { estimate: f64, ceiling: f64 },
    #[error("clean fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("assumed base error {base} outside [0, {ceiling})")]
    InvalidBase { base: f64, ceiling: f64 },
    #[error("class count {0} < 2")]
    InvalidClassCount(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub current_estimate: f64,
    pub classes: u32,
    pub clean_fraction: f64,
    #[serde(default)]
    pub assumed_base_ber: f64,
    pub target_accuracy: f64,
    /// Labels a full clean would touch.
    pub n_labels: usize,
    pub label_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPrediction {
    pub residual_noise: f64,
    pub estimate: f64,
    pub verdict: Verdict,
    pub label_cost: f64,
}

pub fn whatif_clean(req: &WhatIfRequest) -> Result<WhatIfPrediction, WhatIfError> {
    if req.classes < 2 {
        return Err(WhatIfError::InvalidClassCount(req.classes));
    }
    if !(0.0..=1.0).contains(&req.clean_fraction) {
        return Err(WhatIfError::InvalidFraction(req.clean_fraction));
    }
    let ceiling = 1.0 - 1.0 / req.classes as f64;
    if req.current_estimate >= ceiling {
        return Err(WhatIfError::DegenerateModel {
            estimate: req.current_estimate,
            ceiling,
        });
    }
    let b = req.assumed_base_ber;
    if !(0.0..ceiling).contains(&b) {
        return Err(WhatIfError::InvalidBase { base: b, ceiling });
    }
    let rho = ((req.current_estimate - b) / (ceiling - b)).clamp(0.0, 1.0);
    let remaining = rho * (1.0 - req.clean_fraction);
    let estimate = ber_evolution_uniform(b, req.classes as usize, remaining).expect("arguments checked above");
    Ok(WhatIfPrediction {
        residual_noise: rho,
        estimate,
        verdict: decide(estimate, req.target_accuracy),
        label_cost: req.clean_fraction * req.n_labels as f64 * req.label_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(estimate: f64, classes: u32, fraction: f64, base: f64) -> WhatIfRequest {
        WhatIfRequest {
            current_estimate: estimate,
            classes,
            clean_fraction: fraction,
            assumed_base_ber: base,
            target_accuracy: 0.8,
            n_labels: 1000,
            label_cost: 0.02,
        }
    }

    #[test]
    fn half_clean_example() {
        let p = whatif_clean(&req(0.26, 10, 0.5, 0.1)).unwrap();
        assert!((p.residual_noise - 0.2).abs() < 1e-12);
        assert!((p.estimate - 0.18).abs() < 1e-12);
        assert_eq!(p.verdict, Verdict::Realistic);
        assert!((p.label_cost - 10.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints() {
        let p = whatif_clean(&req(0.26, 10, 0.0, 0.1)).unwrap();
        assert!((p.estimate - 0.26).abs() < 1e-12);
        assert_eq!(p.label_cost, 0.0);
        let p = whatif_clean(&req(0.3, 2, 1.0, 0.0)).unwrap();
        assert_eq!(p.estimate, 0.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            whatif_clean(&req(0.5, 2, 0.5, 0.0)),
            Err(WhatIfError::DegenerateModel { .. })
        ));
        assert!(whatif_clean(&req(0.2, 2, 1.5, 0.0)).is_err());
        assert!(whatif_clean(&req(0.2, 2, 0.5, 0.6)).is_err());
    }
}
