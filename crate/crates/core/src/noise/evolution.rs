use serde::{Deserialize, Serialize};

use super::{DiscreteJointDistribution, NoiseError, TransitionMatrix};

const ARGMAX_SLACK: f64 = 1e-12;

/// Bayes error by enumeration: `E_X[1 - max_y p(y | x)]`.
pub fn ber_exact(dist: &DiscreteJointDistribution) -> f64 {
    dist.points().iter().map(|p| p.p_x * (1.0 - p.max_posterior())).sum()
}

/// Bayes error after replacing a `rho` fraction of labels by uniform draws
/// over all `classes`: `ber0 + rho * (1 - 1/C - ber0)`.
pub fn ber_evolution_uniform(ber0: f64, classes: usize, rho: f64) -> Result<f64, NoiseError> {
    if classes < 2 {
        return Err(NoiseError::DomainError(format!("class count {classes} < 2")));
    }
    let ceiling = 1.0 - 1.0 / classes as f64;
    if !(0.0..=ceiling + 1e-12).contains(&ber0) {
        return Err(NoiseError::DomainError(format!(
            "base error {ber0} outside [0, {ceiling}]"
        )));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(NoiseError::DomainError(format!("rho {rho} outside [0, 1]")));
    }
    Ok(ber0 + rho * (ceiling - ber0))
}

/// Both routes to the post-flip Bayes error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEvolution {
    /// Closed form in terms of the clean distribution and the transition.
    pub formula: f64,
    /// Bayes error of the explicitly flipped distribution.
    pub enumerated: f64,
    /// Points whose most likely class changes after flipping. The closed
    /// form assumes this list is empty.
    pub violations: Vec<u64>,
}

impl NoiseEvolution {
    pub fn assumption_holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// Turns the first violation into an error carrying both values.
    pub fn strict(self) -> Result<f64, NoiseError> {
        match self.violations.first() {
            None => Ok(self.formula),
            Some(&x_id) => Err(NoiseError::AssumptionViolated {
                x_id,
                formula: self.formula,
                enumerated: self.enumerated,
            }),
        }
    }
}

/// `R*_noisy = R* + E_X[ρ(y_x) p(y_x|x)] - Σ_{y≠y_x} E_X[t_{y_x,y} p(y|x)]`,
/// evaluated by enumeration alongside the Bayes error of the flipped
/// distribution.
pub fn ber_evolution_exact(
    dist: &DiscreteJointDistribution,
    transition: &TransitionMatrix,
) -> Result<NoiseEvolution, NoiseError> {
    let flipped = dist.flipped(transition)?;
    let mut formula = ber_exact(dist);
    let mut violations = Vec::new();
    for (clean, noisy) in dist.points().iter().zip(flipped.points()) {
        let yx = clean.argmax();
        let gained = transition.flip_fraction(yx) * clean.conditional[yx];
        let received: f64 = clean
            .conditional
            .iter()
            .enumerate()
            .filter(|&(y, _)| y != yx)
            .map(|(y, &p)| transition.get(yx, y) * p)
            .sum();
        formula += clean.p_x * (gained - received);
        if noisy.max_posterior() > noisy.conditional[yx] + ARGMAX_SLACK {
            violations.push(clean.x_id);
        }
    }
    if !violations.is_empty() {
        log::warn!("argmax preservation violated at {} support point(s)", violations.len());
    }
    Ok(NoiseEvolution {
        formula,
        enumerated: ber_exact(&flipped),
        violations,
    })
}

/// Inputs for the transition-based bounds on the noisy Bayes error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBoundsInput {
    /// Error of the best known model on clean labels, used as an upper
    /// bound on the clean Bayes error.
    pub sota_error: f64,
    pub transition: TransitionMatrix,
    /// Class frequencies of the clean labels.
    pub class_prior: Vec<f64>,
}

impl NoiseBoundsInput {
    pub fn new(sota_error: f64, transition: TransitionMatrix, class_prior: Vec<f64>) -> Result<Self, NoiseError> {
        if !(0.0..=1.0).contains(&sota_error) {
            return Err(NoiseError::DomainError(format!(
                "sota error {sota_error} outside [0, 1]"
            )));
        }
        if class_prior.len() != transition.classes() {
            return Err(NoiseError::ClassCountMismatch {
                transition: transition.classes(),
                labels: class_prior.len(),
            });
        }
        let s: f64 = class_prior.iter().sum();
        if (s - 1.0).abs() > 1e-9 || class_prior.iter().any(|&p| p < 0.0) {
            return Err(NoiseError::DomainError(format!("class prior sums to {s}")));
        }
        Ok(NoiseBoundsInput {
            sota_error,
            transition,
            class_prior,
        })
    }

    /// Uniform class prior.
    pub fn with_uniform_prior(sota_error: f64, transition: TransitionMatrix) -> Result<Self, NoiseError> {
        let c = transition.classes();
        Self::new(sota_error, transition, vec![1.0 / c as f64; c])
    }
}

/// Lower and upper bound on the noisy Bayes error:
/// `[(1-s) min_y ρ(y) - s max_{y'≠y''} t, s + max_y ρ(y)]`, clamped to `[0, 1]`.
pub fn ber_bounds(input: &NoiseBoundsInput) -> (f64, f64) {
    let s = input.sota_error;
    let flips = input.transition.flip_fractions();
    let min_flip = flips.iter().copied().fold(f64::INFINITY, f64::min);
    let max_flip = flips.iter().copied().fold(0.0, f64::max);
    let lo = ((1.0 - s) * min_flip - s * input.transition.max_off_diagonal()).max(0.0);
    let hi = (s + max_flip).min(1.0);
    (lo.min(hi), hi)
}

/// `s + E_Y[ρ(y)] (1 - s)`, using the prior-weighted mean flip fraction.
pub fn ber_predicted_mean(input: &NoiseBoundsInput) -> f64 {
    let s = input.sota_error;
    let mean_flip: f64 = input
        .class_prior
        .iter()
        .zip(input.transition.flip_fractions())
        .map(|(p, r)| p * r)
        .sum();
    s + mean_flip * (1.0 - s)
}
