use proptest::prelude::*;
use snoopy_core::knn::{apply_label_edits, decode_arm_state, encode_arm_state, nn_error_full, LabelEdit, Split};
use snoopy_core::{ArmState, EmbeddingMatrix, LabelVector, Metric};

/// Brute-force nearest neighbour: full scan, smallest (distance, index).
fn oracle_nearest(train: &[Vec<f32>], q: &[f32], metric: Metric) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, row) in train.iter().enumerate() {
        let d = match metric {
            Metric::Euclidean => row
                .iter()
                .zip(q)
                .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                .fold(0.0, |s, v| s + v),
            Metric::CosineDissimilarity => {
                let dot = row
                    .iter()
                    .zip(q)
                    .map(|(&a, &b)| a as f64 * b as f64)
                    .fold(0.0, |s, v| s + v);
                let na = row.iter().map(|&a| a as f64 * a as f64).fold(0.0, |s, v| s + v);
                let nb = q.iter().map(|&b| b as f64 * b as f64).fold(0.0, |s, v| s + v);
                if na == 0.0 || nb == 0.0 {
                    2.0
                } else {
                    1.0 - dot / (na.sqrt() * nb.sqrt())
                }
            }
        };
        if d < best.0 || (d == best.0 && i < best.1) {
            best = (d, i);
        }
    }
    best.1
}

#[derive(Debug)]
struct Instance {
    train: Vec<Vec<f32>>,
    test: Vec<Vec<f32>>,
    train_y: Vec<u32>,
    test_y: Vec<u32>,
    metric: Metric,
}

impl Instance {
    fn matrices(&self) -> (EmbeddingMatrix, EmbeddingMatrix) {
        (
            EmbeddingMatrix::from_rows("t", &self.train).unwrap(),
            EmbeddingMatrix::from_rows("t", &self.test).unwrap(),
        )
    }

    fn oracle_error(&self, prefix: usize, train_y: &[u32]) -> f64 {
        let wrong = self
            .test
            .iter()
            .zip(&self.test_y)
            .filter(|(q, &y)| train_y[oracle_nearest(&self.train[..prefix], q, self.metric)] != y)
            .count();
        wrong as f64 / self.test.len() as f64
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..60, 1usize..30, 1usize..6, any::<bool>(), any::<bool>()).prop_flat_map(
        |(n_train, n_test, dim, cosine, grid)| {
            // A coarse grid produces exact distance ties.
            let value = if grid {
                (-3i8..4).prop_map(f32::from).boxed()
            } else {
                (-10.0f32..10.0).boxed()
            };
            (
                prop::collection::vec(prop::collection::vec(value.clone(), dim), n_train),
                prop::collection::vec(prop::collection::vec(value, dim), n_test),
                prop::collection::vec(0u32..3, n_train),
                prop::collection::vec(0u32..3, n_test),
            )
                .prop_map(move |(train, test, train_y, test_y)| Instance {
                    train,
                    test,
                    train_y,
                    test_y,
                    metric: if cosine {
                        Metric::CosineDissimilarity
                    } else {
                        Metric::Euclidean
                    },
                })
        },
    )
}

fn stream(inst: &Instance, batch: usize) -> ArmState {
    let (train, test) = inst.matrices();
    let mut arm = ArmState::new("t", inst.metric, 3, train.n_rows(), test.n_rows()).unwrap();
    while !arm.is_finished() {
        arm.pull(&train, &test, &inst.train_y, &inst.test_y, batch).unwrap();
    }
    arm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn streaming_matches_brute_force(inst in instance(), batch in 1usize..70) {
        let arm = stream(&inst, batch);
        for (t, q) in inst.test.iter().enumerate() {
            prop_assert_eq!(arm.nearest()[t].train_index, oracle_nearest(&inst.train, q, inst.metric));
        }
        let expected = inst.oracle_error(inst.train.len(), &inst.train_y);
        prop_assert_eq!(arm.last_point().unwrap().err_1nn, expected);

        let (train, test) = inst.matrices();
        prop_assert_eq!(nn_error_full(&train, &test, &inst.train_y, &inst.test_y, inst.metric).unwrap(), expected);
    }

    #[test]
    fn curve_points_track_every_prefix(inst in instance(), batch in 1usize..10) {
        let arm = stream(&inst, batch);
        for p in arm.curve() {
            prop_assert_eq!(p.err_1nn, inst.oracle_error(p.n_consumed, &inst.train_y));
        }
    }

    #[test]
    fn batch_size_does_not_change_the_result(inst in instance()) {
        let reference = stream(&inst, inst.train.len());
        for batch in [1, 7, 25] {
            let arm = stream(&inst, batch);
            prop_assert_eq!(arm.nearest(), reference.nearest());
            prop_assert_eq!(arm.last_point().unwrap().err_1nn, reference.last_point().unwrap().err_1nn);
        }
    }

    #[test]
    fn label_edits_match_recomputation(
        inst in instance(),
        prefix_pulls in 1usize..5,
        raw_edits in prop::collection::vec((any::<bool>(), 0usize..100, 0u32..3), 0..20),
    ) {
        let (train, test) = inst.matrices();
        let mut arm = ArmState::new("t", inst.metric, 3, train.n_rows(), test.n_rows()).unwrap();
        for _ in 0..prefix_pulls {
            if arm.is_finished() {
                break;
            }
            arm.pull(&train, &test, &inst.train_y, &inst.test_y, 3).unwrap();
        }
        let edits: Vec<LabelEdit> = raw_edits
            .iter()
            .map(|&(on_train, i, label)| LabelEdit {
                split: if on_train { Split::Train } else { Split::Test },
                index: i % if on_train { inst.train.len() } else { inst.test.len() },
                label,
            })
            .collect();
        let mut tr = LabelVector::new(inst.train_y.clone(), 3).unwrap();
        let mut te = LabelVector::new(inst.test_y.clone(), 3).unwrap();
        let incremental = apply_label_edits(&arm, &mut tr, &mut te, &edits, 1).unwrap();

        let edited = Instance {
            train: inst.train.clone(),
            test: inst.test.clone(),
            train_y: tr.labels().to_vec(),
            test_y: te.labels().to_vec(),
            metric: inst.metric,
        };
        prop_assert_eq!(incremental, edited.oracle_error(arm.n_consumed(), &edited.train_y));
    }

    #[test]
    fn snapshots_round_trip(inst in instance(), pulls in 0usize..4) {
        let (train, test) = inst.matrices();
        let mut arm = ArmState::new("t", inst.metric, 3, train.n_rows(), test.n_rows()).unwrap();
        for _ in 0..pulls {
            if !arm.is_finished() {
                arm.pull(&train, &test, &inst.train_y, &inst.test_y, 5).unwrap();
            }
        }
        prop_assert_eq!(decode_arm_state(&encode_arm_state(&arm)).unwrap(), arm);
    }
}

#[test]
fn invalid_edits_leave_labels_untouched() {
    let train = EmbeddingMatrix::new("t", 2, 1, vec![0.0, 1.0]).unwrap();
    let test = EmbeddingMatrix::new("t", 1, 1, vec![0.1]).unwrap();
    let mut arm = ArmState::new("t", Metric::Euclidean, 2, 2, 1).unwrap();
    arm.pull(&train, &test, &[0, 1], &[0], 2).unwrap();
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
            label: 0,
        },
    ];
    assert!(apply_label_edits(&arm, &mut tr, &mut te, &edits, 1).is_err());
    assert_eq!(tr.labels(), &[0, 1]);
    assert!(tr.journal().is_empty());
}
