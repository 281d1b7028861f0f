//! End-to-end feasibility study: load transformations, schedule 1NN pulls,
//! turn the final errors into estimates and a verdict.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{read_embedding_file, read_label_file, Budget, DataError, EmbeddingMatrix, LabelVector};
use crate::datamodel::{Metric, Strategy, StudyManifest};
use crate::estimator::{
    cover_hart_lower_bound, fit_loglinear, samples_to_target, BerEstimate, EstimatorError, ExtrapolationFit,
    SamplesToTarget, StudyResult, DEFAULT_TRUST_FACTOR,
};
use crate::knn::{nn_error_full, ArmState, KnnError};
use crate::scheduler::{
    perfect_strategy, run_with_doubling, successive_halving, uniform_allocation, Arm, SchedulerError, SchedulerRun,
    TrackedArm,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Run settings taken from a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub target_accuracy: f64,
    pub batch_fraction: f64,
    pub strategy: Strategy,
    pub budget: Budget,
    pub seed: u64,
    pub shuffle: bool,
}

impl StudyConfig {
    pub fn from_manifest(m: &StudyManifest) -> Self {
        StudyConfig {
            target_accuracy: m.target_accuracy,
            batch_fraction: m.batch_fraction,
            strategy: m.strategy,
            budget: m.budget,
            seed: m.seed,
            shuffle: m.shuffle,
        }
    }
}

/// Train and test embeddings of one transformation.
#[derive(Debug, Clone)]
pub struct ArmData {
    pub id: String,
    pub metric: Metric,
    pub train: Arc<EmbeddingMatrix>,
    pub test: Arc<EmbeddingMatrix>,
}

/// Everything a study reads.
#[derive(Debug, Clone)]
pub struct StudyData {
    pub config: StudyConfig,
    pub arms: Vec<ArmData>,
    pub train_labels: LabelVector,
    pub test_labels: LabelVector,
}

impl StudyData {
    /// Reads every file referenced by a manifest whose paths are resolved.
    pub fn load(manifest: &StudyManifest) -> Result<Self, StudyError> {
        let train_labels = read_label_file(&manifest.train_labels)?;
        let test_labels = read_label_file(&manifest.test_labels)?;
        let arms = manifest
            .transformations
            .iter()
            .map(|t| {
                let train = read_embedding_file(&t.train_path)?.with_transformation_id(&t.transformation_id);
                let test = read_embedding_file(&t.test_path)?.with_transformation_id(&t.transformation_id);
                Ok(ArmData {
                    id: t.transformation_id.clone(),
                    metric: t.metric,
                    train: Arc::new(train),
                    test: Arc::new(test),
                })
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Self::new(StudyConfig::from_manifest(manifest), arms, train_labels, test_labels)
    }

    /// Checks shapes and brings both label vectors to a common class count.
    pub fn new(
        config: StudyConfig,
        arms: Vec<ArmData>,
        train_labels: LabelVector,
        test_labels: LabelVector,
    ) -> Result<Self, StudyError> {
        if arms.is_empty() {
            return Err(DataError::InvalidManifest("no transformations".into()).into());
        }
        if train_labels.is_empty() || test_labels.is_empty() {
            return Err(DataError::InvalidManifest("label files must be non-empty".into()).into());
        }
        for a in &arms {
            let mismatch = |detail: String| DataError::ShapeMismatch {
                transformation_id: a.id.clone(),
                detail,
            };
            if a.train.n_rows() != train_labels.len() {
                return Err(mismatch(format!(
                    "train matrix has {} rows, train labels have {}",
                    a.train.n_rows(),
                    train_labels.len()
                ))
                .into());
            }
            if a.test.n_rows() != test_labels.len() {
                return Err(mismatch(format!(
                    "test matrix has {} rows, test labels have {}",
                    a.test.n_rows(),
                    test_labels.len()
                ))
                .into());
            }
            if a.train.dim() != a.test.dim() {
                return Err(mismatch(format!(
                    "train dim {} differs from test dim {}",
                    a.train.dim(),
                    a.test.dim()
                ))
                .into());
            }
        }
        let classes = train_labels.classes().max(test_labels.classes());
        let widen = |l: LabelVector| -> Result<LabelVector, DataError> {
            if l.classes() == classes {
                Ok(l)
            } else {
                LabelVector::new(l.labels().to_vec(), classes)
            }
        };
        Ok(StudyData {
            config,
            arms,
            train_labels: widen(train_labels)?,
            test_labels: widen(test_labels)?,
        })
    }

    pub fn classes(&self) -> u32 {
        self.train_labels.classes()
    }

    pub fn n_train(&self) -> usize {
        self.train_labels.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_labels.len()
    }

    /// Training rows consumed per pull: `ceil(batch_fraction * n_train)`.
    pub fn batch_size(&self) -> usize {
        ((self.config.batch_fraction * self.n_train() as f64).ceil() as usize).clamp(1, self.n_train())
    }

    fn stream_order(&self) -> Option<Arc<[usize]>> {
        self.config.shuffle.then(|| {
            let mut order: Vec<usize> = (0..self.n_train()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.config.seed));
            Arc::from(order)
        })
    }
}

/// An [`ArmState`] bound to its data so the scheduler can pull it.
pub struct KnnArm<'a> {
    pub state: ArmState,
    data: &'a ArmData,
    train_labels: &'a [u32],
    test_labels: &'a [u32],
    batch_size: usize,
}

impl Arm for KnnArm<'_> {
    type Error = KnnError;

    fn id(&self) -> &str {
        self.state.transformation_id()
    }

    fn stream_len(&self) -> usize {
        self.state.pulls_to_finish(self.batch_size)
    }

    fn pull(&mut self) -> Result<f64, KnnError> {
        let p = self.state.pull(
            &self.data.train,
            &self.data.test,
            self.train_labels,
            self.test_labels,
            self.batch_size,
        )?;
        Ok(p.err_1nn)
    }
}

/// Log-linear fit of the winning arm's convergence curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    pub transformation_id: String,
    pub n_current: usize,
    pub fit: Option<ExtrapolationFit>,
    pub samples: Option<SamplesToTarget>,
    /// Why no fit is available, if so.
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub result: StudyResult,
    pub run: SchedulerRun,
    pub arms: Vec<ArmState>,
    pub extrapolation: ExtrapolationReport,
}

/// Runs the configured strategy and evaluates the outcome.
pub fn run_study(data: &StudyData) -> Result<StudyOutcome, StudyError> {
    let batch_size = data.batch_size();
    let order = data.stream_order();
    let classes = data.classes();
    let mut arms = data
        .arms
        .iter()
        .map(|a| {
            let mut state = ArmState::new(a.id.clone(), a.metric, classes, data.n_train(), data.n_test())?;
            if let Some(order) = &order {
                state = state.with_order(order.clone())?;
            }
            Ok(TrackedArm::new(KnnArm {
                state,
                data: a,
                train_labels: data.train_labels.labels(),
                test_labels: data.test_labels.labels(),
                batch_size,
            }))
        })
        .collect::<Result<Vec<_>, KnnError>>()?;

    let cfg = &data.config;
    let run = match (cfg.strategy, cfg.budget) {
        (Strategy::Perfect, _) => perfect_strategy(&mut arms, &oracle_winner(data)?)?,
        (strategy, Budget::Auto) => run_with_doubling(&mut arms, strategy)?,
        (Strategy::Uniform, Budget::Pulls(b)) => uniform_allocation(&mut arms, b)?,
        (Strategy::SuccessiveHalving, Budget::Pulls(b)) => successive_halving(&mut arms, b, false)?,
        (Strategy::SuccessiveHalvingTangent, Budget::Pulls(b)) => successive_halving(&mut arms, b, true)?,
    };
    let states: Vec<ArmState> = arms.into_iter().map(|a| a.into_inner().state).collect();
    let result = evaluate_states(&states, cfg.target_accuracy)?;
    let extrapolation = extrapolate_winner(&states, &result, classes);
    Ok(StudyOutcome {
        result,
        run,
        arms: states,
        extrapolation,
    })
}

/// Arm with the lowest full-data 1NN error, ties by id. Evaluation harness
/// only: it does all the work the scheduler is meant to avoid.
pub fn oracle_winner(data: &StudyData) -> Result<String, StudyError> {
    let mut best: Option<(f64, &str)> = None;
    for a in &data.arms {
        let err = nn_error_full(
            &a.train,
            &a.test,
            data.train_labels.labels(),
            data.test_labels.labels(),
            a.metric,
        )?;
        let better = match best {
            None => true,
            Some((e, id)) => err < e || (err == e && a.id.as_str() < id),
        };
        if better {
            best = Some((err, &a.id));
        }
    }
    Ok(best.expect("at least one arm").1.to_string())
}

/// Estimates from each pulled arm's latest curve point.
pub fn evaluate_states(states: &[ArmState], target_accuracy: f64) -> Result<StudyResult, StudyError> {
    let per_arm: Vec<BerEstimate> = states
        .iter()
        .filter_map(|s| {
            s.last_point().map(|p| BerEstimate {
                transformation_id: s.transformation_id().to_string(),
                err_1nn: p.err_1nn,
                value: p.ber_estimate,
                n_used: p.n_consumed,
            })
        })
        .collect();
    Ok(StudyResult::from_estimates(per_arm, target_accuracy)?)
}

/// Estimates from each pulled arm's consumed prefix under the given labels.
/// No distances are computed: the stored nearest indices are relabelled.
pub fn reevaluate(
    states: &[ArmState],
    train_labels: &[u32],
    test_labels: &[u32],
    target_accuracy: f64,
) -> Result<StudyResult, StudyError> {
    let mut per_arm = Vec::with_capacity(states.len());
    for s in states.iter().filter(|s| s.n_consumed() > 0) {
        let err = s.error_with_labels(train_labels, test_labels);
        per_arm.push(BerEstimate {
            transformation_id: s.transformation_id().to_string(),
            err_1nn: err,
            value: cover_hart_lower_bound(err, s.classes())?,
            n_used: s.n_consumed(),
        });
    }
    Ok(StudyResult::from_estimates(per_arm, target_accuracy)?)
}

pub fn extrapolate_winner(states: &[ArmState], result: &StudyResult, classes: u32) -> ExtrapolationReport {
    let state = states
        .iter()
        .find(|s| s.transformation_id() == result.winner)
        .expect("winner has a state");
    let n_current = state.n_consumed();
    let mut report = ExtrapolationReport {
        transformation_id: result.winner.clone(),
        n_current,
        fit: None,
        samples: None,
        note: None,
    };
    match fit_loglinear(state.curve()) {
        Ok(fit) => {
            report.fit = Some(fit);
            match samples_to_target(
                &fit,
                result.target_accuracy,
                classes,
                n_current as u64,
                DEFAULT_TRUST_FACTOR,
            ) {
                Ok(s) => report.samples = Some(s),
                Err(e) => report.note = Some(e.to_string()),
            }
        }
        Err(e) => report.note = Some(e.to_string()),
    }
    report
}
