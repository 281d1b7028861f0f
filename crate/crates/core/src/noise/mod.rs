//! Label-noise models and the closed-form evolution of the Bayes error
//! under class-dependent label flipping.

mod distribution;
mod evolution;
mod inject;
pub mod presets;
mod transition;

use thiserror::Error;

pub use distribution::{DiscreteJointDistribution, SupportPoint};
pub use evolution::{
    ber_bounds, ber_evolution_exact, ber_evolution_uniform, ber_exact, ber_predicted_mean, NoiseBoundsInput,
    NoiseEvolution,
};
pub use inject::{inject_class_noise, inject_uniform_noise, realized_flip_fraction};
pub use transition::TransitionMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("flip probability {0} outside [0, 1]")]
    InvalidRho(f64),
    #[error("transition matrix has {transition} classes, labels have {labels}")]
    ClassCountMismatch { transition: usize, labels: usize },
    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("argument outside its domain: {0}")]
    DomainError(String),
    #[error("argmax of support point {x_id} changes after flipping (formula {formula}, enumerated {enumerated})")]
    AssumptionViolated { x_id: u64, formula: f64, enumerated: f64 },
}
