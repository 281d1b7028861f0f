use serde::{Deserialize, Serialize};

use super::NoiseError;

const COLUMN_TOLERANCE: f64 = 1e-9;

/// Class-dependent noise model. `t[noisy][clean]` is the probability that a
/// sample of clean class `clean` carries label `noisy`; every column sums
/// to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransitionRepr", into = "TransitionRepr")]
pub struct TransitionMatrix {
    t: Vec<Vec<f64>>,
    diagonal_max_in_rows: bool,
    diagonal_max_in_columns: bool,
}

#[derive(Serialize, Deserialize)]
struct TransitionRepr {
    #[serde(rename = "C")]
    classes: usize,
    t: Vec<Vec<f64>>,
}

impl TryFrom<TransitionRepr> for TransitionMatrix {
    type Error = NoiseError;

    fn try_from(repr: TransitionRepr) -> Result<Self, Self::Error> {
        if repr.t.len() != repr.classes {
            return Err(NoiseError::InvalidTransition(format!(
                "C = {} but matrix has {} rows",
                repr.classes,
                repr.t.len()
            )));
        }
        TransitionMatrix::new(repr.t)
    }
}

impl From<TransitionMatrix> for TransitionRepr {
    fn from(m: TransitionMatrix) -> Self {
        TransitionRepr {
            classes: m.t.len(),
            t: m.t,
        }
    }
}

impl TransitionMatrix {
    pub fn new(t: Vec<Vec<f64>>) -> Result<Self, NoiseError> {
        let c = t.len();
        if c < 2 {
            return Err(NoiseError::InvalidTransition("need at least 2 classes".into()));
        }
        if let Some(r) = t.iter().position(|row| row.len() != c) {
            return Err(NoiseError::InvalidTransition(format!(
                "row {r} has {} entries, expected {c}",
                t[r].len()
            )));
        }
        for (i, row) in t.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(NoiseError::InvalidTransition(format!(
                        "entry t[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
            }
        }
        for col in 0..c {
            let sum: f64 = t.iter().map(|row| row[col]).sum();
            if (sum - 1.0).abs() > COLUMN_TOLERANCE {
                return Err(NoiseError::InvalidTransition(format!(
                    "column {col} sums to {sum}, expected 1"
                )));
            }
        }
        let diagonal_max_in_rows = (0..c).all(|i| t[i].iter().all(|&v| v <= t[i][i]));
        let diagonal_max_in_columns = (0..c).all(|j| t.iter().all(|row| row[j] <= t[j][j]));
        Ok(TransitionMatrix {
            t,
            diagonal_max_in_rows,
            diagonal_max_in_columns,
        })
    }

    pub fn identity(classes: usize) -> Result<Self, NoiseError> {
        Self::new(
            (0..classes)
                .map(|i| (0..classes).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Replace each label, with probability `rho`, by a uniform draw over all
    /// classes (including its own).
    pub fn uniform(classes: usize, rho: f64) -> Result<Self, NoiseError> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(NoiseError::InvalidRho(rho));
        }
        let off = rho / classes as f64;
        Self::new(
            (0..classes)
                .map(|i| {
                    (0..classes)
                        .map(|j| if i == j { 1.0 - rho + off } else { off })
                        .collect()
                })
                .collect(),
        )
    }

    /// Flips a `rho` fraction of every class `y` to class `(y + 1) mod C`.
    pub fn pairwise(classes: usize, rho: f64) -> Result<Self, NoiseError> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(NoiseError::InvalidRho(rho));
        }
        let mut t = vec![vec![0.0; classes]; classes];
        for y in 0..classes {
            t[y][y] = 1.0 - rho;
            t[(y + 1) % classes][y] += rho;
        }
        Self::new(t)
    }

    /// Builds a matrix from per-class flip fractions. Column `y` keeps
    /// `1 - flip[y]` on the diagonal, sends `partner[y]` to class
    /// `(y + 1) mod C`, and spreads the remainder evenly over the other classes.
    pub fn from_flip_profile(flip: &[f64], partner: &[f64]) -> Result<Self, NoiseError> {
        let c = flip.len();
        if partner.len() != c || c < 2 {
            return Err(NoiseError::InvalidTransition("profile lengths disagree".into()));
        }
        let mut t = vec![vec![0.0; c]; c];
        for y in 0..c {
            let p = partner[y];
            if p > flip[y] + 1e-15 || p < 0.0 {
                return Err(NoiseError::InvalidTransition(format!(
                    "partner mass {p} exceeds flip fraction {} of class {y}",
                    flip[y]
                )));
            }
            t[y][y] = 1.0 - flip[y];
            let next = (y + 1) % c;
            t[next][y] = p;
            if c > 2 {
                let rest = (flip[y] - p) / (c - 2) as f64;
                for (row, slot) in t.iter_mut().enumerate() {
                    if row != y && row != next {
                        slot[y] = rest;
                    }
                }
            } else {
                t[next][y] = flip[y];
            }
        }
        Self::new(t)
    }

    pub fn classes(&self) -> usize {
        self.t.len()
    }

    /// `P(noisy = noisy | clean = clean)`.
    #[inline]
    pub fn get(&self, noisy: usize, clean: usize) -> f64 {
        self.t[noisy][clean]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.t
    }

    /// Fraction of class `y` that gets flipped, `1 - t[y][y]`.
    pub fn flip_fraction(&self, y: usize) -> f64 {
        1.0 - self.t[y][y]
    }

    pub fn flip_fractions(&self) -> Vec<f64> {
        (0..self.classes()).map(|y| self.flip_fraction(y)).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(0.0, f64::max)
    }

    pub fn min_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(f64::INFINITY, f64::min)
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        self.t
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, &v)| v))
    }

    /// Whether every diagonal entry is the largest value of its row.
    pub fn diagonal_max_in_rows(&self) -> bool {
        self.diagonal_max_in_rows
    }

    /// Whether every diagonal entry is the largest value of its column.
    pub fn diagonal_max_in_columns(&self) -> bool {
        self.diagonal_max_in_columns
    }

    pub fn from_json_str(text: &str) -> Result<Self, NoiseError> {
        serde_json::from_str(text).map_err(|e| NoiseError::InvalidTransition(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("transition serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_must_sum_to_one() {
        assert!(TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.1, 0.8]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).is_ok());
        assert!(TransitionMatrix::new(vec![vec![1.1, 0.0], vec![-0.1, 1.0]]).is_err());
    }

    #[test]
    fn uniform_entries() {
        let t = TransitionMatrix::uniform(2, 0.5).unwrap();
        assert_eq!(t.rows(), &[vec![0.75, 0.25], vec![0.25, 0.75]]);
        assert!((t.flip_fraction(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dominance_flags_differ_between_rows_and_columns() {
        let t = TransitionMatrix::new(vec![vec![0.6, 0.0, 0.7], vec![0.2, 0.9, 0.0], vec![0.2, 0.1, 0.3]]).unwrap();
        assert!(!t.diagonal_max_in_rows());
        assert!(!t.diagonal_max_in_columns());
        let t = TransitionMatrix::new(vec![vec![0.4, 0.45, 0.0], vec![0.3, 0.55, 0.0], vec![0.3, 0.0, 1.0]]).unwrap();
        assert!(t.diagonal_max_in_columns());
        assert!(!t.diagonal_max_in_rows());
    }

    #[test]
    fn json_shape() {
        let t = TransitionMatrix::from_json_str(r#"{"C": 2, "t": [[0.75, 0.25], [0.25, 0.75]]}"#).unwrap();
        assert_eq!(t.classes(), 2);
        let back = TransitionMatrix::from_json_str(&t.to_json_string()).unwrap();
        assert_eq!(back, t);
        assert!(TransitionMatrix::from_json_str(r#"{"C": 3, "t": [[1, 0], [0, 1]]}"#).is_err());
    }

    #[test]
    fn pairwise_is_column_stochastic() {
        let t = TransitionMatrix::pairwise(4, 0.3).unwrap();
        assert_eq!(t.get(1, 0), 0.3);
        assert_eq!(t.get(0, 3), 0.3);
        assert!((t.flip_fraction(2) - 0.3).abs() < 1e-15);
    }
}
