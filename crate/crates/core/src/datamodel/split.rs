use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, EmbeddingMatrix, LabelVector};

/// Disjoint train/test index lists over the rows of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    train_indices: Vec<usize>,
    test_indices: Vec<usize>,
}

impl DatasetSplit {
    pub fn new(train_indices: Vec<usize>, test_indices: Vec<usize>) -> Result<Self, DataError> {
        if train_indices.is_empty() || test_indices.is_empty() {
            return Err(DataError::InvalidSplit("train and test must both be non-empty".into()));
        }
        let mut seen = HashSet::with_capacity(train_indices.len() + test_indices.len());
        for &i in train_indices.iter().chain(&test_indices) {
            if !seen.insert(i) {
                return Err(DataError::InvalidSplit(format!("row {i} referenced twice")));
            }
        }
        Ok(DatasetSplit {
            train_indices,
            test_indices,
        })
    }

    /// Seeded random split of `n` rows, with `ceil(test_fraction * n)` test rows.
    pub fn random(n: usize, test_fraction: f64, seed: u64) -> Result<Self, DataError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DataError::InvalidSplit(format!(
                "test fraction {test_fraction} outside (0, 1)"
            )));
        }
        let n_test = ((n as f64) * test_fraction).ceil() as usize;
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let test = rows.split_off(n - n_test.min(n));
        Self::new(rows, test)
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_indices
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_indices
    }

    /// Checks every index against a dataset with `n_rows` rows.
    pub fn check_bounds(&self, n_rows: usize) -> Result<(), DataError> {
        match self
            .train_indices
            .iter()
            .chain(&self.test_indices)
            .find(|&&i| i >= n_rows)
        {
            Some(&index) => Err(DataError::IndexOutOfRange { index, len: n_rows }),
            None => Ok(()),
        }
    }

    pub fn split_matrix(&self, m: &EmbeddingMatrix) -> Result<(EmbeddingMatrix, EmbeddingMatrix), DataError> {
        Ok((m.select_rows(&self.train_indices)?, m.select_rows(&self.test_indices)?))
    }

    pub fn split_labels(&self, l: &LabelVector) -> Result<(LabelVector, LabelVector), DataError> {
        self.check_bounds(l.len())?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| l.labels()[i]).collect::<Vec<_>>();
        Ok((
            LabelVector::new(pick(&self.train_indices), l.classes())?,
            LabelVector::new(pick(&self.test_indices), l.classes())?,
        ))
    }
}
