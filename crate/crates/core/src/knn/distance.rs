use super::KnnError;
use crate::datamodel::Metric;

/// Dissimilarity assigned when either cosine operand is the zero vector.
pub const ZERO_VECTOR_DISSIMILARITY: f64 = 2.0;

/// Squared Euclidean distance or cosine dissimilarity, accumulated in `f64`.
pub fn distance(a: &[f32], b: &[f32], metric: Metric) -> Result<f64, KnnError> {
    if a.len() != b.len() {
        return Err(KnnError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(match metric {
        Metric::Euclidean => squared_euclidean(a, b),
        Metric::CosineDissimilarity => cosine_with_norms(a, b, squared_norm(a), squared_norm(b)),
    })
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = *x as f64 - *y as f64;
        acc += d * d;
    }
    acc
}

#[inline]
pub(crate) fn squared_norm(a: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for x in a {
        acc += (*x as f64) * (*x as f64);
    }
    acc
}

#[inline]
pub(crate) fn cosine_with_norms(a: &[f32], b: &[f32], a_sq: f64, b_sq: f64) -> f64 {
    if a_sq == 0.0 || b_sq == 0.0 {
        return ZERO_VECTOR_DISSIMILARITY;
    }
    let mut dot = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += (*x as f64) * (*y as f64);
    }
    1.0 - dot / (a_sq.sqrt() * b_sq.sqrt())
}
