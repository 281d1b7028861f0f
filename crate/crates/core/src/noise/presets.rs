//! Representative transition matrices for crowd-sourced CIFAR label sets.
//!
//! The published noise studies report these transitions as heat maps. The
//! matrices below are synthetic stand-ins that reproduce the summary
//! statistics the bounds depend on: the smallest and largest per-class
//! flip fraction and the largest off-diagonal entry. Individual entries are
//! not the measured ones.

use super::TransitionMatrix;

/// CIFAR-10N "aggregate" labels: flip fractions in `[0.03, 0.17]`, largest
/// off-diagonal entry `0.10`.
pub fn cifar10n_aggregate() -> TransitionMatrix {
    let flip = [0.03, 0.05, 0.06, 0.08, 0.09, 0.10, 0.12, 0.13, 0.15, 0.17];
    let mut partner: Vec<f64> = flip.iter().map(|f| 0.6 * f).collect();
    partner[9] = 0.10;
    TransitionMatrix::from_flip_profile(&flip, &partner).expect("valid preset")
}

/// CIFAR-10N "random 1" labels: flip fractions in `[0.10, 0.26]`, largest
/// off-diagonal entry `0.23`.
pub fn cifar10n_random() -> TransitionMatrix {
    let flip = [0.10, 0.12, 0.14, 0.15, 0.17, 0.18, 0.20, 0.22, 0.24, 0.26];
    let mut partner: Vec<f64> = flip.iter().map(|f| 0.5 * f).collect();
    partner[9] = 0.23;
    TransitionMatrix::from_flip_profile(&flip, &partner).expect("valid preset")
}

/// CIFAR-100N "noisy" labels: flip fractions in `[0.083, 0.854]`, largest
/// off-diagonal entry `0.312`. The diagonal is not dominant for the
/// noisiest classes.
pub fn cifar100n_noisy() -> TransitionMatrix {
    let c = 100;
    let mut flip: Vec<f64> = (0..c)
        .map(|i| 0.083 + (0.854 - 0.083) * i as f64 / (c - 1) as f64)
        .collect();
    flip[0] = 0.083;
    flip[c - 1] = 0.854;
    let mut partner: Vec<f64> = flip.iter().map(|f| 0.3 * f).collect();
    partner[c - 1] = 0.312;
    TransitionMatrix::from_flip_profile(&flip, &partner).expect("valid preset")
}
