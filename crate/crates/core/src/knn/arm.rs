use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{cosine_with_norms, squared_euclidean, squared_norm};
use super::KnnError;
use crate::datamodel::{EmbeddingMatrix, LabelVector, Metric};
use crate::estimator::cover_hart_lower_bound;

/// One point of a convergence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_consumed: usize,
    pub err_1nn: f64,
    pub ber_estimate: f64,
}

/// Closest training row seen so far for one test point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    pub train_index: usize,
}

impl Nearest {
    pub const NONE: Nearest = Nearest {
        distance: f64::INFINITY,
        train_index: usize::MAX,
    };

    /// Equal distances resolve to the smaller training index.
    #[inline]
    fn offer(&mut self, distance: f64, train_index: usize) {
        if distance < self.distance || (distance == self.distance && train_index < self.train_index) {
            self.distance = distance;
            self.train_index = train_index;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A single label correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEdit {
    pub split: Split,
    pub index: usize,
    pub label: u32,
}

/// Streaming 1NN state of one transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub(crate) transformation_id: String,
    pub(crate) metric: Metric,
    pub(crate) classes: u32,
    pub(crate) n_train: usize,
    pub(crate) n_consumed: usize,
    pub(crate) nearest: Vec<Nearest>,
    pub(crate) curve: Vec<CurvePoint>,
    pub(crate) finished: bool,
    /// Stream position -> training row. `None` streams rows in file order.
    pub(crate) order: Option<Arc<[usize]>>,
}

impl ArmState {
    pub fn new(
        transformation_id: impl Into<String>,
        metric: Metric,
        classes: u32,
        n_train: usize,
        n_test: usize,
    ) -> Result<Self, KnnError> {
        if classes < 2 {
            return Err(KnnError::InvalidClassCount(classes));
        }
        if n_train == 0 || n_test == 0 {
            return Err(KnnError::ShapeMismatch("train and test sets must be non-empty".into()));
        }
        Ok(ArmState {
            transformation_id: transformation_id.into(),
            metric,
            classes,
            n_train,
            n_consumed: 0,
            nearest: vec![Nearest::NONE; n_test],
            curve: Vec::new(),
            finished: false,
            order: None,
        })
    }

    /// Streams training rows in the given order. `order` must be a
    /// permutation of `0..n_train`.
    pub fn with_order(mut self, order: Arc<[usize]>) -> Result<Self, KnnError> {
        if order.len() != self.n_train {
            return Err(KnnError::ShapeMismatch(format!(
                "stream order has {} entries for {} training rows",
                order.len(),
                self.n_train
            )));
        }
        let mut seen = vec![false; self.n_train];
        for &i in order.iter() {
            if i >= self.n_train || std::mem::replace(&mut seen[i], true) {
                return Err(KnnError::ShapeMismatch("stream order is not a permutation".into()));
            }
        }
        self.order = Some(order);
        Ok(self)
    }

    pub fn transformation_id(&self) -> &str {
        &self.transformation_id
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_test(&self) -> usize {
        self.nearest.len()
    }

    pub fn n_consumed(&self) -> usize {
        self.n_consumed
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn nearest(&self) -> &[Nearest] {
        &self.nearest
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn last_point(&self) -> Option<&CurvePoint> {
        self.curve.last()
    }

    /// Number of pulls of size `batch_size` needed to exhaust the stream.
    pub fn pulls_to_finish(&self, batch_size: usize) -> usize {
        self.n_train.div_ceil(batch_size.max(1))
    }

    fn check_shapes(
        &self,
        train: &EmbeddingMatrix,
        test: &EmbeddingMatrix,
        train_labels: &[u32],
        test_labels: &[u32],
    ) -> Result<(), KnnError> {
        if train.n_rows() != self.n_train || train_labels.len() != self.n_train {
            return Err(KnnError::ShapeMismatch(format!(
                "expected {} training rows and labels, got {} and {}",
                self.n_train,
                train.n_rows(),
                train_labels.len()
            )));
        }
        if test.n_rows() != self.n_test() || test_labels.len() != self.n_test() {
            return Err(KnnError::ShapeMismatch(format!(
                "expected {} test rows and labels, got {} and {}",
                self.n_test(),
                test.n_rows(),
                test_labels.len()
            )));
        }
        if train.dim() != test.dim() {
            return Err(KnnError::DimensionMismatch {
                left: train.dim(),
                right: test.dim(),
            });
        }
        Ok(())
    }

    /// Consumes the next `batch_size` training rows and records a curve point.
    pub fn pull(
        &mut self,
        train: &EmbeddingMatrix,
        test: &EmbeddingMatrix,
        train_labels: &[u32],
        test_labels: &[u32],
        batch_size: usize,
    ) -> Result<CurvePoint, KnnError> {
        if self.finished {
            return Err(KnnError::ArmFinished(self.transformation_id.clone()));
        }
        if batch_size == 0 {
            return Err(KnnError::InvalidBatchSize);
        }
        self.check_shapes(train, test, train_labels, test_labels)?;

        let start = self.n_consumed;
        let end = (start + batch_size).min(self.n_train);
        let rows: Vec<usize> = match &self.order {
            Some(order) => order[start..end].to_vec(),
            None => (start..end).collect(),
        };
        let metric = self.metric;
        let train_norms: Vec<f64> = match metric {
            Metric::CosineDissimilarity => rows.iter().map(|&r| squared_norm(train.row(r))).collect(),
            Metric::Euclidean => Vec::new(),
        };

        self.nearest.par_iter_mut().enumerate().for_each(|(t, best)| {
            let q = test.row(t);
            match metric {
                Metric::Euclidean => {
                    for &r in &rows {
                        best.offer(squared_euclidean(q, train.row(r)), r);
                    }
                }
                Metric::CosineDissimilarity => {
                    let q_sq = squared_norm(q);
                    for (k, &r) in rows.iter().enumerate() {
                        best.offer(cosine_with_norms(q, train.row(r), q_sq, train_norms[k]), r);
                    }
                }
            }
        });

        self.n_consumed = end;
        self.finished = end == self.n_train;
        let err_1nn = self.error_with_labels(train_labels, test_labels);
        let point = CurvePoint {
            n_consumed: end,
            err_1nn,
            ber_estimate: cover_hart_lower_bound(err_1nn, self.classes).expect("class count validated at construction"),
        };
        self.curve.push(point);
        Ok(point)
    }

    /// 1NN error of the consumed prefix under the given labels: one pass
    /// over the test points, no distance work.
    pub fn error_with_labels(&self, train_labels: &[u32], test_labels: &[u32]) -> f64 {
        if self.n_consumed == 0 {
            return 1.0;
        }
        let wrong = self
            .nearest
            .iter()
            .zip(test_labels)
            .filter(|(nn, &y)| train_labels[nn.train_index] != y)
            .count();
        wrong as f64 / self.nearest.len() as f64
    }
}

/// Exact 1NN test error by a full pairwise scan.
pub fn nn_error_full(
    train: &EmbeddingMatrix,
    test: &EmbeddingMatrix,
    train_labels: &[u32],
    test_labels: &[u32],
    metric: Metric,
) -> Result<f64, KnnError> {
    if train.n_rows() == 0 || test.n_rows() == 0 {
        return Err(KnnError::ShapeMismatch("train and test sets must be non-empty".into()));
    }
    if train.n_rows() != train_labels.len() || test.n_rows() != test_labels.len() {
        return Err(KnnError::ShapeMismatch("row count differs from label count".into()));
    }
    if train.dim() != test.dim() {
        return Err(KnnError::DimensionMismatch {
            left: train.dim(),
            right: test.dim(),
        });
    }
    let train_norms: Vec<f64> = match metric {
        Metric::CosineDissimilarity => (0..train.n_rows()).map(|r| squared_norm(train.row(r))).collect(),
        Metric::Euclidean => Vec::new(),
    };
    let wrong: usize = (0..test.n_rows())
        .into_par_iter()
        .map(|t| {
            let q = test.row(t);
            let q_sq = squared_norm(q);
            let mut best = Nearest::NONE;
            for r in 0..train.n_rows() {
                let d = match metric {
                    Metric::Euclidean => squared_euclidean(q, train.row(r)),
                    Metric::CosineDissimilarity => cosine_with_norms(q, train.row(r), q_sq, train_norms[r]),
                };
                best.offer(d, r);
            }
            usize::from(train_labels[best.train_index] != test_labels[t])
        })
        .sum();
    Ok(wrong as f64 / test.n_rows() as f64)
}

/// Validates all edits, then applies them to the label vectors. Nothing is
/// applied if any edit is invalid.
pub fn apply_edits_to_labels(
    train_labels: &mut LabelVector,
    test_labels: &mut LabelVector,
    edits: &[LabelEdit],
    timestamp: u64,
) -> Result<(), KnnError> {
    for e in edits {
        let target = match e.split {
            Split::Train => &*train_labels,
            Split::Test => &*test_labels,
        };
        if e.index >= target.len() {
            return Err(KnnError::IndexOutOfRange {
                split: e.split,
                index: e.index,
                len: target.len(),
            });
        }
        if e.label >= target.classes() {
            return Err(KnnError::LabelOutOfRange {
                label: e.label,
                classes: target.classes(),
            });
        }
    }
    for e in edits {
        let target = match e.split {
            Split::Train => &mut *train_labels,
            Split::Test => &mut *test_labels,
        };
        target
            .set_label(e.index, e.label, timestamp)
            .expect("edit validated above");
    }
    Ok(())
}

/// Applies label edits and returns the arm's recomputed 1NN error over its
/// consumed prefix.
pub fn apply_label_edits(
    state: &ArmState,
    train_labels: &mut LabelVector,
    test_labels: &mut LabelVector,
    edits: &[LabelEdit],
    timestamp: u64,
) -> Result<f64, KnnError> {
    if train_labels.len() != state.n_train || test_labels.len() != state.n_test() {
        return Err(KnnError::ShapeMismatch("label vectors do not match the arm".into()));
    }
    apply_edits_to_labels(train_labels, test_labels, edits, timestamp)?;
    Ok(state.error_with_labels(train_labels.labels(), test_labels.labels()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f32]) -> EmbeddingMatrix {
        EmbeddingMatrix::new("t", values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn single_pull_examples() {
        let train = col(&[0.0, 1.0]);
        let test = col(&[0.1]);
        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 2, 1).unwrap();
        let p = arm.pull(&train, &test, &[0, 1], &[0], 2).unwrap();
        assert_eq!(p.err_1nn, 0.0);
        assert!(arm.is_finished());
        assert!(matches!(
            arm.pull(&train, &test, &[0, 1], &[0], 2),
            Err(KnnError::ArmFinished(_))
        ));

        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 2, 1).unwrap();
        assert_eq!(arm.pull(&train, &test, &[0, 1], &[1], 2).unwrap().err_1nn, 1.0);
    }

    #[test]
    fn batches_clip_at_stream_end() {
        let train = col(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let test = col(&[3.9, 0.2]);
        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 5, 2).unwrap();
        let labels = [0, 0, 0, 0, 1];
        let p1 = arm.pull(&train, &test, &labels, &[1, 0], 3).unwrap();
        assert_eq!((p1.n_consumed, p1.err_1nn), (3, 0.5));
        let p2 = arm.pull(&train, &test, &labels, &[1, 0], 3).unwrap();
        assert_eq!((p2.n_consumed, p2.err_1nn), (5, 0.0));
        assert!(arm.is_finished());
        assert_eq!(arm.nearest()[0].train_index, 4);
    }

    #[test]
    fn duplicate_training_points_lower_index_wins() {
        let train = col(&[1.0, 1.0]);
        let test = col(&[1.0]);
        assert_eq!(
            nn_error_full(&train, &test, &[1, 0], &[1], Metric::Euclidean).unwrap(),
            0.0
        );
        assert_eq!(
            nn_error_full(&train, &test, &[0, 1], &[1], Metric::Euclidean).unwrap(),
            1.0
        );
        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 2, 1).unwrap();
        arm.pull(&train, &test, &[1, 0], &[1], 1).unwrap();
        arm.pull(&train, &test, &[1, 0], &[1], 1).unwrap();
        assert_eq!(arm.nearest()[0].train_index, 0);
    }

    #[test]
    fn single_training_point() {
        let train = col(&[5.0]);
        let test = col(&[0.0, 1.0, 2.0, 3.0]);
        let err = nn_error_full(&train, &test, &[1], &[1, 0, 0, 1], Metric::Euclidean).unwrap();
        assert_eq!(err, 0.5);
    }

    #[test]
    fn edits_that_miss_the_neighbours_change_nothing() {
        let train = col(&[0.0, 10.0, 20.0]);
        let test = col(&[0.5, 19.0]);
        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 3, 2).unwrap();
        let mut tr = LabelVector::new(vec![0, 1, 1], 2).unwrap();
        let mut te = LabelVector::new(vec![0, 0], 2).unwrap();
        arm.pull(&train, &test, tr.labels(), te.labels(), 3).unwrap();
        let before = arm.error_with_labels(tr.labels(), te.labels());
        assert_eq!(before, 0.5);
        let edit = [LabelEdit {
            split: Split::Train,
            index: 1,
            label: 0,
        }];
        assert_eq!(apply_label_edits(&arm, &mut tr, &mut te, &edit, 0).unwrap(), before);
        let edit = [LabelEdit {
            split: Split::Train,
            index: 2,
            label: 0,
        }];
        assert_eq!(apply_label_edits(&arm, &mut tr, &mut te, &edit, 1).unwrap(), 0.0);
        assert_eq!(tr.journal().len(), 2);
    }

    #[test]
    fn invalid_edit_applies_nothing() {
        let mut tr = LabelVector::new(vec![0, 1], 2).unwrap();
        let mut te = LabelVector::new(vec![0], 2).unwrap();
        let edits = [
            LabelEdit {
                split: Split::Train,
                index: 0,
                label: 1,
            },
            LabelEdit {
                split: Split::Test,
                index: 5,
                label: 1,
            },
        ];
        assert!(matches!(
            apply_edits_to_labels(&mut tr, &mut te, &edits, 0),
            Err(KnnError::IndexOutOfRange {
                split: Split::Test,
                index: 5,
                len: 1
            })
        ));
        assert_eq!(tr.labels(), &[0, 1]);
    }

    #[test]
    fn custom_stream_order() {
        let train = col(&[0.0, 1.0, 2.0]);
        let test = col(&[1.9]);
        let order: Arc<[usize]> = Arc::from(vec![2usize, 0, 1]);
        let mut arm = ArmState::new("t", Metric::Euclidean, 2, 3, 1)
            .unwrap()
            .with_order(order)
            .unwrap();
        arm.pull(&train, &test, &[0, 0, 1], &[1], 1).unwrap();
        assert_eq!(arm.nearest()[0].train_index, 2);
        assert!(ArmState::new("t", Metric::Euclidean, 2, 3, 1)
            .unwrap()
            .with_order(Arc::from(vec![0usize, 0, 1]))
            .is_err());
    }
}
