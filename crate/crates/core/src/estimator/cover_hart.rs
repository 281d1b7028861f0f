use super::EstimatorError;

fn ceiling(classes: u32) -> Result<f64, EstimatorError> {
    if classes < 2 {
        return Err(EstimatorError::InvalidClassCount(classes));
    }
    Ok((classes as f64 - 1.0) / classes as f64)
}

/// Lower bound on the Bayes error implied by a 1NN error `r1nn`:
/// `r / (1 + sqrt(1 - C r / (C - 1)))`.
///
/// Errors above `(C-1)/C` are clamped to it.
pub fn cover_hart_lower_bound(r1nn: f64, classes: u32) -> Result<f64, EstimatorError> {
    let max = ceiling(classes)?;
    if r1nn.is_nan() || r1nn < 0.0 {
        return Err(EstimatorError::OutOfRange { value: r1nn, max });
    }
    let r = if r1nn > max {
        log::warn!("1NN error {r1nn} exceeds {max} for {classes} classes; clamping");
        max
    } else {
        r1nn
    };
    let c = classes as f64;
    // ((C-1) - C r) / (C-1) with one rounding in the numerator; the square
    // root amplifies cancellation error near the ceiling.
    let radicand = ((-c).mul_add(r, c - 1.0) / (c - 1.0)).max(0.0);
    Ok(r / (1.0 + radicand.sqrt()))
}

/// The 1NN error whose lower bound equals `estimate`, found by bisection.
pub fn invert_cover_hart(estimate: f64, classes: u32) -> Result<f64, EstimatorError> {
    let max = ceiling(classes)?;
    if !(0.0..=max).contains(&estimate) {
        return Err(EstimatorError::OutOfRange { value: estimate, max });
    }
    let (mut lo, mut hi) = (0.0f64, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cover_hart_lower_bound(mid, classes)? < estimate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Both ends bracket the root to within one ulp; pick the closer one.
    let f_lo = (cover_hart_lower_bound(lo, classes)? - estimate).abs();
    let f_hi = (cover_hart_lower_bound(hi, classes)? - estimate).abs();
    Ok(if f_lo <= f_hi { lo } else { hi })
}
