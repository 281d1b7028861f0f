//! On-disk layout of a session:
//!
//! ```text
//! <data_dir>/sessions/<id>/session.json   immutable creation record
//! <data_dir>/sessions/<id>/journal.jsonl  append-only event log
//! <data_dir>/sessions/<id>/arms/          arm states of the latest run
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use snoopy_core::knn::{decode_arm_state, encode_arm_state, LabelEdit};
use snoopy_core::scheduler::SchedulerRun;
use snoopy_core::study::ExtrapolationReport;
use snoopy_core::{ArmState, StudyManifest};

use crate::cost::CostModel;
use crate::error::ServiceError;

/// Clean reference labels for simulated cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceLabels {
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub manifest: StudyManifest,
    pub cost_model: CostModel,
    #[serde(default)]
    pub reference_labels: Option<ReferenceLabels>,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    Run {
        seq: u64,
        elapsed_seconds: f64,
        run: SchedulerRun,
        extrapolation: ExtrapolationReport,
    },
    Labels {
        seq: u64,
        edits: Vec<LabelEdit>,
        /// Position in the simulated-cleaning order after this batch.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clean_cursor: Option<usize>,
    },
}

impl JournalEvent {
    pub fn seq(&self) -> u64 {
        match self {
            JournalEvent::Run { seq, .. } | JournalEvent::Labels { seq, .. } => *seq,
        }
    }
}

/// Parses journal text. A torn final line (crash mid-append) is dropped;
/// corruption anywhere else is an error.
pub fn parse_journal(text: &str) -> Result<Vec<JournalEvent>, String> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str::<JournalEvent>(line) {
            Ok(e) => events.push(e),
            Err(e) if i + 1 == lines.len() && !text.ends_with('\n') => {
                log::warn!("dropping torn journal tail: {e}");
            }
            Err(e) => return Err(format!("journal line {}: {e}", i + 1)),
        }
    }
    for w in events.windows(2) {
        if w[1].seq() <= w[0].seq() {
            return Err(format!("journal sequence goes from {} to {}", w[0].seq(), w[1].seq()));
        }
    }
    Ok(events)
}

#[derive(Debug, Serialize, Deserialize)]
struct ArmCacheIndex {
    run_seq: u64,
    count: usize,
}

#[derive(Debug, Clone)]
pub struct SessionDir {
    root: PathBuf,
}

impl SessionDir {
    pub fn new(data_dir: &Path, session_id: &str) -> Self {
        SessionDir {
            root: data_dir.join("sessions").join(session_id),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn journal_path(&self) -> PathBuf {
        self.root.join("journal.jsonl")
    }

    fn arms_dir(&self) -> PathBuf {
        self.root.join("arms")
    }

    pub fn create(&self, record: &SessionRecord) -> Result<(), ServiceError> {
        fs::create_dir_all(self.arms_dir())?;
        write_atomic(
            &self.root.join("session.json"),
            &serde_json::to_vec_pretty(record).expect("serializable"),
        )?;
        File::create(self.journal_path())?;
        Ok(())
    }

    pub fn read_record(&self) -> Result<SessionRecord, ServiceError> {
        let bytes = fs::read(self.root.join("session.json"))?;
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::StorageFailure(format!("session.json: {e}")))
    }

    pub fn read_journal(&self) -> Result<Vec<JournalEvent>, ServiceError> {
        let path = self.journal_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let events = parse_journal(&text).map_err(ServiceError::StorageFailure)?;
        if !text.is_empty() && !text.ends_with('\n') {
            // Cut the torn tail so later appends start on a fresh line.
            let keep: usize = text.rfind('\n').map_or(0, |i| i + 1);
            fs::write(&path, &text[..keep])?;
        }
        Ok(events)
    }

    pub fn open_journal(&self) -> Result<Journal, ServiceError> {
        let file = OpenOptions::new().create(true).append(true).open(self.journal_path())?;
        Ok(Journal { file })
    }

    pub fn write_arm_cache(&self, run_seq: u64, states: &[ArmState]) -> Result<(), ServiceError> {
        let dir = self.arms_dir();
        fs::create_dir_all(&dir)?;
        for (i, s) in states.iter().enumerate() {
            write_atomic(&dir.join(format!("{i}.snpa")), &encode_arm_state(s))?;
        }
        let index = ArmCacheIndex {
            run_seq,
            count: states.len(),
        };
        write_atomic(
            &dir.join("index.json"),
            &serde_json::to_vec(&index).expect("serializable"),
        )
    }

    /// Arm states cached for the run with sequence number `run_seq`, if the
    /// cache is complete and belongs to that run.
    pub fn read_arm_cache(&self, run_seq: u64) -> Option<Vec<ArmState>> {
        let dir = self.arms_dir();
        let index: ArmCacheIndex = serde_json::from_slice(&fs::read(dir.join("index.json")).ok()?).ok()?;
        if index.run_seq != run_seq {
            return None;
        }
        (0..index.count)
            .map(|i| {
                let bytes = fs::read(dir.join(format!("{i}.snpa"))).ok()?;
                match decode_arm_state(&bytes) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        log::warn!("discarding arm cache: {e}");
                        None
                    }
                }
            })
            .collect()
    }
}

pub struct Journal {
    file: File,
}

impl Journal {
    pub fn append(&mut self, event: &JournalEvent) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(event).expect("serializable");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Ids of all sessions present under `data_dir`.
pub fn list_sessions(data_dir: &Path) -> Result<Vec<String>, ServiceError> {
    let dir = data_dir.join("sessions");
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry?;
        if entry.path().join("session.json").is_file() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

/// Number of lines in a journal file; used by tests and diagnostics.
pub fn journal_len(path: &Path) -> std::io::Result<usize> {
    Ok(BufReader::new(File::open(path)?).lines().count())
}
