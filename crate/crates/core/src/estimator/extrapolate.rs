use serde::{Deserialize, Serialize};

use super::{invert_cover_hart, EstimatorError};
use crate::knn::CurvePoint;

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_TRUST_FACTOR: f64 = 5.0;

/// Least-squares fit of `log err = -alpha * log n + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    pub alpha: f64,
    pub intercept: f64,
    pub fit_points: usize,
    /// RMSE of the fit in log space.
    pub residual: f64,
}

impl ExtrapolationFit {
    /// Fitted 1NN error at `n` samples.
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept - self.alpha * n.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SamplesToTarget {
    Needed { needed: u64 },
    Unreachable,
    Untrustworthy { needed: u64 },
}

pub fn fit_loglinear(curve: &[CurvePoint]) -> Result<ExtrapolationFit, EstimatorError> {
    fit_loglinear_window(curve, DEFAULT_WINDOW)
}

/// Fits over the last `window` points. Points with zero error are dropped
/// first since their logarithm is undefined.
pub fn fit_loglinear_window(curve: &[CurvePoint], window: usize) -> Result<ExtrapolationFit, EstimatorError> {
    if curve.len() < 2 {
        return Err(EstimatorError::InsufficientPoints(curve.len()));
    }
    let usable: Vec<&CurvePoint> = curve.iter().filter(|p| p.err_1nn > 0.0 && p.n_consumed > 0).collect();
    if usable.len() < 2 {
        return Err(EstimatorError::ZeroErrorPoint {
            remaining: usable.len(),
        });
    }
    let tail = &usable[usable.len().saturating_sub(window.max(2))..];
    let xs: Vec<f64> = tail.iter().map(|p| (p.n_consumed as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.err_1nn.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(EstimatorError::InsufficientPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(ExtrapolationFit {
        alpha: -slope,
        intercept,
        fit_points: xs.len(),
        residual: (sse / k).sqrt(),
    })
}

/// Additional training samples needed before the fitted curve reaches the
/// 1NN error whose BER estimate is `1 - target_accuracy`.
pub fn samples_to_target(
    fit: &ExtrapolationFit,
    target_accuracy: f64,
    classes: u32,
    n_current: u64,
    trust_factor: f64,
) -> Result<SamplesToTarget, EstimatorError> {
    if !(fit.alpha > 0.0) {
        return Err(EstimatorError::DegenerateFit(fit.alpha));
    }
    if classes < 2 {
        return Err(EstimatorError::InvalidClassCount(classes));
    }
    let ceiling = (classes as f64 - 1.0) / classes as f64;
    let target_error = 1.0 - target_accuracy;
    if target_error >= ceiling {
        return Ok(SamplesToTarget::Needed { needed: 0 });
    }
    if target_error <= 0.0 {
        return Ok(SamplesToTarget::Unreachable);
    }
    let r_target = invert_cover_hart(target_error, classes)?;
    if r_target <= 0.0 {
        return Ok(SamplesToTarget::Unreachable);
    }
    let n_star = ((fit.intercept - r_target.ln()) / fit.alpha).exp();
    if !n_star.is_finite() || n_star >= u64::MAX as f64 {
        return Ok(SamplesToTarget::Unreachable);
    }
    let needed = (n_star.ceil() as u64).saturating_sub(n_current);
    if needed as f64 > trust_factor * n_current as f64 {
        Ok(SamplesToTarget::Untrustworthy { needed })
    } else {
        Ok(SamplesToTarget::Needed { needed })
    }
}
