use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NoiseError, TransitionMatrix};
use crate::datamodel::LabelVector;

/// Random stream for one sample, keyed by `(seed, index)` so the outcome
/// does not depend on iteration order.
fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Each label is, with probability `rho`, replaced by a uniform draw over
/// all classes (which may be the label itself).
pub fn inject_uniform_noise(labels: &LabelVector, rho: f64, seed: u64) -> Result<LabelVector, NoiseError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(NoiseError::InvalidRho(rho));
    }
    let classes = labels.classes();
    let noisy = labels
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mut rng = sample_rng(seed, i);
            if rng.random::<f64>() < rho {
                rng.random_range(0..classes)
            } else {
                y
            }
        })
        .collect();
    Ok(labels
        .with_labels(noisy)
        .expect("uniform draws stay within the class range"))
}

/// Each label `y` is replaced by a draw from column `y` of the transition.
pub fn inject_class_noise(
    labels: &LabelVector,
    transition: &TransitionMatrix,
    seed: u64,
) -> Result<LabelVector, NoiseError> {
    let classes = labels.classes() as usize;
    if transition.classes() != classes {
        return Err(NoiseError::ClassCountMismatch {
            transition: transition.classes(),
            labels: classes,
        });
    }
    let noisy = labels
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let u: f64 = sample_rng(seed, i).random();
            let clean = y as usize;
            let mut acc = 0.0;
            let mut last_positive = clean;
            for noisy in 0..classes {
                let p = transition.get(noisy, clean);
                if p > 0.0 {
                    last_positive = noisy;
                }
                acc += p;
                if u < acc {
                    return noisy as u32;
                }
            }
            last_positive as u32
        })
        .collect();
    Ok(labels
        .with_labels(noisy)
        .expect("transition draws stay within the class range"))
}

/// Fraction of positions where the two label slices differ.
pub fn realized_flip_fraction(before: &[u32], after: &[u32]) -> f64 {
    if before.is_empty() {
        return 0.0;
    }
    let changed = before.iter().zip(after).filter(|(a, b)| a != b).count();
    changed as f64 / before.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize, classes: u32) -> LabelVector {
        LabelVector::new((0..n).map(|i| (i as u32) % classes).collect(), classes).unwrap()
    }

    #[test]
    fn zero_rho_is_identity() {
        let l = labels(1000, 3);
        assert_eq!(inject_uniform_noise(&l, 0.0, 1).unwrap().labels(), l.labels());
    }

    #[test]
    fn deterministic_given_seed() {
        let l = labels(5000, 4);
        let a = inject_uniform_noise(&l, 0.2, 9).unwrap();
        let b = inject_uniform_noise(&l, 0.2, 9).unwrap();
        let c = inject_uniform_noise(&l, 0.2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn full_uniform_noise_changes_nine_tenths() {
        // Binomial(100000, 0.9) has sd ~ 0.00095, so +-0.01 is > 10 sd.
        let l = labels(100_000, 10);
        let noisy = inject_uniform_noise(&l, 1.0, 3).unwrap();
        let frac = realized_flip_fraction(l.labels(), noisy.labels());
        assert!((frac - 0.9).abs() < 0.01, "{frac}");
    }

    #[test]
    fn binary_class_noise_flips_a_quarter_per_class() {
        let l = labels(100_000, 2);
        let t = TransitionMatrix::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let noisy = inject_class_noise(&l, &t, 5).unwrap();
        for class in 0..2u32 {
            let (total, flipped) = l
                .labels()
                .iter()
                .zip(noisy.labels())
                .filter(|(a, _)| **a == class)
                .fold((0usize, 0usize), |(t, f), (a, b)| (t + 1, f + usize::from(a != b)));
            let frac = flipped as f64 / total as f64;
            assert!((frac - 0.25).abs() < 0.01, "class {class}: {frac}");
        }
    }

    #[test]
    fn identity_transition_and_mismatch() {
        let l = labels(1000, 3);
        let same = inject_class_noise(&l, &TransitionMatrix::identity(3).unwrap(), 2).unwrap();
        assert_eq!(same.labels(), l.labels());
        assert!(matches!(
            inject_class_noise(&l, &TransitionMatrix::identity(2).unwrap(), 2),
            Err(NoiseError::ClassCountMismatch { .. })
        ));
    }
}
