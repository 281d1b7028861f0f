use serde::{Deserialize, Serialize};

use super::{NoiseError, TransitionMatrix};

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub x_id: u64,
    /// Marginal probability of this point.
    pub p_x: f64,
    /// Class posterior `p(y | x)`.
    pub conditional: Vec<f64>,
}

impl SupportPoint {
    /// Most likely class; ties resolve to the smallest class index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (y, &p) in self.conditional.iter().enumerate() {
            if p > self.conditional[best] {
                best = y;
            }
        }
        best
    }

    pub fn max_posterior(&self) -> f64 {
        self.conditional[self.argmax()]
    }
}

/// Joint distribution of features and labels over finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJointDistribution {
    classes: usize,
    points: Vec<SupportPoint>,
}

impl DiscreteJointDistribution {
    pub fn new(points: Vec<SupportPoint>) -> Result<Self, NoiseError> {
        let classes = points
            .first()
            .map(|p| p.conditional.len())
            .ok_or_else(|| NoiseError::InvalidDistribution("no support points".into()))?;
        if classes < 2 {
            return Err(NoiseError::InvalidDistribution("need at least 2 classes".into()));
        }
        let mut total = 0.0;
        for p in &points {
            if p.conditional.len() != classes {
                return Err(NoiseError::InvalidDistribution(format!(
                    "point {} has {} classes, expected {classes}",
                    p.x_id,
                    p.conditional.len()
                )));
            }
            if !(0.0..=1.0).contains(&p.p_x) || p.conditional.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(NoiseError::InvalidDistribution(format!(
                    "point {} has a probability outside [0, 1]",
                    p.x_id
                )));
            }
            let s: f64 = p.conditional.iter().sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(NoiseError::InvalidDistribution(format!(
                    "conditional of point {} sums to {s}",
                    p.x_id
                )));
            }
            total += p.p_x;
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(NoiseError::InvalidDistribution(format!("marginal sums to {total}")));
        }
        Ok(DiscreteJointDistribution { classes, points })
    }

    /// Single-point distribution with the given posterior.
    pub fn point_mass(conditional: Vec<f64>) -> Result<Self, NoiseError> {
        Self::new(vec![SupportPoint {
            x_id: 0,
            p_x: 1.0,
            conditional,
        }])
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn points(&self) -> &[SupportPoint] {
        &self.points
    }

    /// Distribution of `(X, noisy Y)`: `p(ỹ | x) = Σ_y t[ỹ][y] p(y | x)`.
    pub fn flipped(&self, transition: &TransitionMatrix) -> Result<Self, NoiseError> {
        if transition.classes() != self.classes {
            return Err(NoiseError::ClassCountMismatch {
                transition: transition.classes(),
                labels: self.classes,
            });
        }
        let points = self
            .points
            .iter()
            .map(|p| SupportPoint {
                x_id: p.x_id,
                p_x: p.p_x,
                conditional: (0..self.classes)
                    .map(|noisy| {
                        p.conditional
                            .iter()
                            .enumerate()
                            .map(|(clean, &q)| transition.get(noisy, clean) * q)
                            .sum()
                    })
                    .collect(),
            })
            .collect();
        Ok(DiscreteJointDistribution {
            classes: self.classes,
            points,
        })
    }
}
