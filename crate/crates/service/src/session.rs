//! One feasibility-study session: data, latest run, label journal and cost
//! ledger. All methods are synchronous; the HTTP layer serialises mutators.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use snoopy_core::estimator::{cover_hart_lower_bound, SamplesToTarget};
use snoopy_core::knn::{apply_edits_to_labels, LabelEdit, Split};
use snoopy_core::scheduler::SchedulerRun;
use snoopy_core::study::{reevaluate, ExtrapolationReport};
use snoopy_core::whatif::{whatif_clean, WhatIfPrediction, WhatIfRequest};
use snoopy_core::{read_label_file, run_study, ArmState, CurvePoint, Strategy, StudyData, StudyManifest, StudyResult};

use crate::cost::{CostLedger, CostModel, CostSummary, LabelPrice};
use crate::error::ServiceError;
use crate::store::{Journal, JournalEvent, ReferenceLabels, SessionDir, SessionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionStatus {
    Created,
    Running,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub status: SessionStatus,
    pub transformations: Vec<String>,
    pub strategy: Strategy,
    pub target_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub classes: u32,
    pub cost_model: CostModel,
    pub created_at: u64,
    /// Reference labels registered, so `clean_step` is available.
    pub simulation: bool,
    pub cleaned_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCurve {
    pub transformation_id: String,
    pub points: Vec<CurvePoint>,
    pub n_consumed: usize,
    pub finished: bool,
    /// Last round a losing arm took part in. `None` for the winner and under
    /// uniform allocation.
    pub eliminated_in_round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub n_consumed: f64,
    pub err_1nn: f64,
    pub ber_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationOverlay {
    pub transformation_id: String,
    pub points: Vec<OverlayPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesView {
    pub target_error: f64,
    pub arms: Vec<ArmCurve>,
    pub extrapolation: Option<ExtrapolationOverlay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunView {
    pub result: StudyResult,
    pub run: SchedulerRun,
    pub extrapolation: ExtrapolationReport,
    /// Wall time of the latest run.
    pub elapsed_seconds: f64,
}

/// Everything readers may see, committed after each mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub info: SessionInfo,
    pub latest: Option<RunView>,
    pub curves: Option<CurvesView>,
    pub costs: CostSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanStepOutcome {
    pub reviewed: usize,
    pub changed: usize,
    pub cleaned_fraction: f64,
    pub result: StudyResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfQuery {
    pub clean_fraction: f64,
    #[serde(default)]
    pub assumed_base_ber: f64,
    /// Overrides the session's label price for this prediction only.
    #[serde(default)]
    pub label_cost: Option<LabelPrice>,
}

struct RunState {
    states: Vec<ArmState>,
    run: SchedulerRun,
    extrapolation: ExtrapolationReport,
    result: StudyResult,
    elapsed_seconds: f64,
}

pub struct Session {
    record: SessionRecord,
    dir: SessionDir,
    journal: Journal,
    next_seq: u64,
    shape: (usize, usize, u32),
    data: Option<StudyData>,
    reference: Option<(Vec<u32>, Vec<u32>)>,
    clean_cursor: usize,
    latest: Option<RunState>,
    ledger: CostLedger,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Validates a manifest's files and optional reference labels. Returns the
/// `(n_train, n_test, classes)` shape.
pub fn validate_inputs(
    manifest: &StudyManifest,
    reference: Option<&ReferenceLabels>,
) -> Result<(usize, usize, u32), ServiceError> {
    manifest.validate_values().map_err(ServiceError::manifest)?;
    let shape = manifest.validate_files().map_err(ServiceError::manifest)?;
    if let Some(r) = reference {
        for (path, n) in [(&r.train, shape.0), (&r.test, shape.1)] {
            let (len, _) = snoopy_core::datamodel::probe_label_shape(path).map_err(ServiceError::manifest)?;
            if len != n {
                return Err(ServiceError::ManifestInvalid {
                    message: format!("reference labels have {len} entries, expected {n}"),
                    path: Some(path.display().to_string()),
                });
            }
        }
    }
    Ok(shape)
}

impl Session {
    pub fn create(
        data_dir: &Path,
        manifest: StudyManifest,
        cost_model: CostModel,
        reference_labels: Option<ReferenceLabels>,
    ) -> Result<Session, ServiceError> {
        cost_model.validate().map_err(ServiceError::InvalidRequest)?;
        let shape = validate_inputs(&manifest, reference_labels.as_ref())?;
        let record = SessionRecord {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            manifest,
            cost_model,
            reference_labels,
            created_at: now_secs(),
        };
        let dir = SessionDir::new(data_dir, &record.session_id);
        dir.create(&record)?;
        let journal = dir.open_journal()?;
        Ok(Session {
            record,
            dir,
            journal,
            next_seq: 1,
            shape,
            data: None,
            reference: None,
            clean_cursor: 0,
            latest: None,
            ledger: CostLedger::default(),
        })
    }

    /// Rebuilds a session from its creation record and journal. Arm states
    /// come from the cache when it matches the last run, otherwise the run
    /// is repeated on the labels it originally saw.
    pub fn recover(data_dir: &Path, session_id: &str) -> Result<Session, ServiceError> {
        let dir = SessionDir::new(data_dir, session_id);
        let record = dir.read_record()?;
        let events = dir.read_journal()?;
        let shape = validate_inputs(&record.manifest, record.reference_labels.as_ref())?;
        let journal = dir.open_journal()?;
        let mut session = Session {
            record,
            dir,
            journal,
            next_seq: events.last().map_or(1, |e| e.seq() + 1),
            shape,
            data: None,
            reference: None,
            clean_cursor: 0,
            latest: None,
            ledger: CostLedger::default(),
        };
        if events.is_empty() {
            return Ok(session);
        }
        session.ensure_loaded()?;
        let model = session.record.cost_model;
        let mut last_run = None;
        for event in events {
            match event {
                JournalEvent::Labels {
                    seq,
                    edits,
                    clean_cursor,
                } => {
                    let data = session.data.as_mut().expect("loaded above");
                    apply_edits_to_labels(&mut data.train_labels, &mut data.test_labels, &edits, seq)?;
                    if let Some(c) = clean_cursor {
                        session.clean_cursor = c;
                    }
                    session.ledger.charge_labels(&model, seq, edits.len());
                }
                JournalEvent::Run {
                    seq,
                    elapsed_seconds,
                    run,
                    extrapolation,
                } => {
                    session.ledger.charge_run(&model, seq, elapsed_seconds);
                    let data = session.data.as_ref().expect("loaded above");
                    let labels_then = (data.train_labels.clone(), data.test_labels.clone());
                    last_run = Some((seq, elapsed_seconds, run, extrapolation, labels_then));
                }
            }
        }
        if let Some((seq, elapsed_seconds, run, extrapolation, (train_then, test_then))) = last_run {
            let states = match session.dir.read_arm_cache(seq) {
                Some(states) => states,
                None => {
                    log::warn!("session {session_id}: arm cache missing, repeating run {seq}");
                    let mut then = session.data.clone().expect("loaded above");
                    then.train_labels = train_then;
                    then.test_labels = test_then;
                    let outcome = run_study(&then)?;
                    if outcome.run != run {
                        log::warn!("session {session_id}: repeated run differs from the journal");
                    }
                    session.dir.write_arm_cache(seq, &outcome.arms)?;
                    outcome.arms
                }
            };
            let result = session.evaluate(&states)?;
            session.latest = Some(RunState {
                states,
                run,
                extrapolation,
                result,
                elapsed_seconds,
            });
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.record.session_id
    }

    pub fn dir(&self) -> &Path {
        self.dir.root()
    }

    fn ensure_loaded(&mut self) -> Result<(), ServiceError> {
        if self.data.is_none() {
            self.data = Some(StudyData::load(&self.record.manifest)?);
        }
        if self.reference.is_none() {
            if let Some(r) = &self.record.reference_labels {
                let train = read_label_file(&r.train).map_err(ServiceError::manifest)?;
                let test = read_label_file(&r.test).map_err(ServiceError::manifest)?;
                self.reference = Some((train.labels().to_vec(), test.labels().to_vec()));
            }
        }
        Ok(())
    }

    fn evaluate(&self, states: &[ArmState]) -> Result<StudyResult, ServiceError> {
        let data = self.data.as_ref().expect("data loaded before evaluation");
        Ok(reevaluate(
            states,
            data.train_labels.labels(),
            data.test_labels.labels(),
            self.record.manifest.target_accuracy,
        )?)
    }

    fn take_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Runs the configured strategy on the current labels.
    pub fn run(&mut self) -> Result<RunView, ServiceError> {
        self.ensure_loaded()?;
        let started = Instant::now();
        let outcome = run_study(self.data.as_ref().expect("loaded above"))?;
        let elapsed_seconds = started.elapsed().as_secs_f64();
        let seq = self.take_seq();
        self.journal.append(&JournalEvent::Run {
            seq,
            elapsed_seconds,
            run: outcome.run.clone(),
            extrapolation: outcome.extrapolation.clone(),
        })?;
        if let Err(e) = self.dir.write_arm_cache(seq, &outcome.arms) {
            log::warn!("session {}: arm cache not written: {e}", self.id());
        }
        self.ledger.charge_run(&self.record.cost_model, seq, elapsed_seconds);
        self.latest = Some(RunState {
            states: outcome.arms,
            run: outcome.run,
            extrapolation: outcome.extrapolation,
            result: outcome.result,
            elapsed_seconds,
        });
        Ok(self.run_view().expect("just set"))
    }

    /// Applies label corrections and re-estimates every pulled arm from its
    /// stored nearest neighbours.
    pub fn edit_labels(&mut self, edits: &[LabelEdit]) -> Result<StudyResult, ServiceError> {
        self.apply_edits(edits, None)
    }

    fn apply_edits(&mut self, edits: &[LabelEdit], clean_cursor: Option<usize>) -> Result<StudyResult, ServiceError> {
        let Some(latest) = &self.latest else {
            return Err(ServiceError::NoPriorRun(self.id().to_string()));
        };
        if edits.is_empty() {
            return Ok(latest.result.clone());
        }
        let data = self.data.as_ref().expect("a run loads the data");
        for e in edits {
            let target = match e.split {
                Split::Train => &data.train_labels,
                Split::Test => &data.test_labels,
            };
            target
                .check_edit(e.index, e.label)
                .map_err(|err| ServiceError::IndexOutOfRange(format!("{:?} edit: {err}", e.split)))?;
        }
        let seq = self.take_seq();
        self.journal.append(&JournalEvent::Labels {
            seq,
            edits: edits.to_vec(),
            clean_cursor,
        })?;
        let data = self.data.as_mut().expect("a run loads the data");
        apply_edits_to_labels(&mut data.train_labels, &mut data.test_labels, edits, seq)?;
        if let Some(c) = clean_cursor {
            self.clean_cursor = c;
        }
        self.ledger.charge_labels(&self.record.cost_model, seq, edits.len());
        let result = self.evaluate(&self.latest.as_ref().expect("checked above").states)?;
        self.latest.as_mut().expect("checked above").result = result.clone();
        Ok(result)
    }

    fn clean_order(&self) -> Vec<(Split, usize)> {
        let (n_train, n_test, _) = self.shape;
        let mut order: Vec<(Split, usize)> = (0..n_train)
            .map(|i| (Split::Train, i))
            .chain((0..n_test).map(|i| (Split::Test, i)))
            .collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.record.manifest.seed));
        order
    }

    /// Reviews the next `fraction` of all labels in a fixed random order and
    /// restores their reference values. Every reviewed label is charged.
    pub fn clean_step(&mut self, fraction: f64) -> Result<CleanStepOutcome, ServiceError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(ServiceError::InvalidRequest(format!(
                "fraction {fraction} outside [0, 1]"
            )));
        }
        if self.record.reference_labels.is_none() {
            return Err(ServiceError::InvalidRequest("session has no reference labels".into()));
        }
        if self.latest.is_none() {
            return Err(ServiceError::NoPriorRun(self.id().to_string()));
        }
        self.ensure_loaded()?;
        let order = self.clean_order();
        let total = order.len();
        let count = ((fraction * total as f64).round() as usize).min(total - self.clean_cursor);
        let end = self.clean_cursor + count;
        let (ref_train, ref_test) = self.reference.as_ref().expect("loaded above");
        let data = self.data.as_ref().expect("loaded above");
        let mut changed = 0;
        let edits: Vec<LabelEdit> = order[self.clean_cursor..end]
            .iter()
            .map(|&(split, index)| {
                let (reference, current) = match split {
                    Split::Train => (ref_train[index], data.train_labels.labels()[index]),
                    Split::Test => (ref_test[index], data.test_labels.labels()[index]),
                };
                changed += usize::from(reference != current);
                LabelEdit {
                    split,
                    index,
                    label: reference,
                }
            })
            .collect();
        let result = self.apply_edits(&edits, Some(end))?;
        Ok(CleanStepOutcome {
            reviewed: edits.len(),
            changed,
            cleaned_fraction: self.clean_cursor as f64 / total as f64,
            result,
        })
    }

    fn run_view(&self) -> Option<RunView> {
        self.latest.as_ref().map(|l| RunView {
            result: l.result.clone(),
            run: l.run.clone(),
            extrapolation: l.extrapolation.clone(),
            elapsed_seconds: l.elapsed_seconds,
        })
    }

    fn curves(&self) -> Option<CurvesView> {
        let latest = self.latest.as_ref()?;
        let arms = latest
            .states
            .iter()
            .map(|s| {
                let id = s.transformation_id();
                let eliminated_in_round = if id == latest.run.winner || latest.run.strategy == Strategy::Uniform {
                    None
                } else {
                    latest
                        .run
                        .rounds
                        .iter()
                        .filter(|r| r.survivors.iter().any(|x| x == id))
                        .map(|r| r.round_index)
                        .max()
                };
                ArmCurve {
                    transformation_id: id.to_string(),
                    points: s.curve().to_vec(),
                    n_consumed: s.n_consumed(),
                    finished: s.is_finished(),
                    eliminated_in_round,
                }
            })
            .collect();
        Some(CurvesView {
            target_error: 1.0 - self.record.manifest.target_accuracy,
            arms,
            extrapolation: self.overlay(latest),
        })
    }

    fn overlay(&self, latest: &RunState) -> Option<ExtrapolationOverlay> {
        const POINTS: usize = 24;
        let report = &latest.extrapolation;
        let fit = report.fit?;
        let state = latest
            .states
            .iter()
            .find(|s| s.transformation_id() == report.transformation_id)?;
        let start = state.curve().first()?.n_consumed.max(1) as f64;
        let current = report.n_current.max(1) as f64;
        let end = match report.samples {
            Some(SamplesToTarget::Needed { needed }) | Some(SamplesToTarget::Untrustworthy { needed }) => {
                (current + needed as f64).min(current * 10.0)
            }
            _ => current * 2.0,
        }
        .max(current);
        let classes = self.shape.2;
        let points = (0..POINTS)
            .map(|i| {
                let n = start * (end / start).powf(i as f64 / (POINTS - 1) as f64);
                let err = fit.predict(n).clamp(0.0, 1.0);
                OverlayPoint {
                    n_consumed: n,
                    err_1nn: err,
                    ber_estimate: cover_hart_lower_bound(err, classes).unwrap_or(f64::NAN),
                }
            })
            .collect();
        Some(ExtrapolationOverlay {
            transformation_id: report.transformation_id.clone(),
            points,
        })
    }

    pub fn cost_summary(&self) -> CostSummary {
        self.ledger.summary(&self.record.cost_model)
    }

    pub fn snapshot(&self, status: SessionStatus) -> Snapshot {
        let (n_train, n_test, classes) = self.shape;
        Snapshot {
            info: SessionInfo {
                session_id: self.id().to_string(),
                status,
                transformations: self
                    .record
                    .manifest
                    .transformations
                    .iter()
                    .map(|t| t.transformation_id.clone())
                    .collect(),
                strategy: self.record.manifest.strategy,
                target_accuracy: self.record.manifest.target_accuracy,
                n_train,
                n_test,
                classes,
                cost_model: self.record.cost_model,
                created_at: self.record.created_at,
                simulation: self.record.reference_labels.is_some(),
                cleaned_fraction: self.clean_cursor as f64 / (n_train + n_test) as f64,
            },
            latest: self.run_view(),
            curves: self.curves(),
            costs: self.cost_summary(),
        }
    }

    /// Status when no mutation is in flight.
    pub fn resting_status(&self) -> SessionStatus {
        if self.latest.is_some() {
            SessionStatus::Completed
        } else {
            SessionStatus::Created
        }
    }
}

/// Predicted effect of cleaning, computed from a committed snapshot.
pub fn whatif(snapshot: &Snapshot, query: &WhatIfQuery) -> Result<WhatIfPrediction, ServiceError> {
    let Some(latest) = &snapshot.latest else {
        return Err(ServiceError::NoPriorRun(snapshot.info.session_id.clone()));
    };
    let price = query.label_cost.unwrap_or(snapshot.info.cost_model.label_cost);
    Ok(whatif_clean(&WhatIfRequest {
        current_estimate: latest.result.aggregate,
        classes: snapshot.info.classes,
        clean_fraction: query.clean_fraction,
        assumed_base_ber: query.assumed_base_ber,
        target_accuracy: snapshot.info.target_accuracy,
        n_labels: snapshot.info.n_train + snapshot.info.n_test,
        label_cost: price.dollars(),
    })?)
}
