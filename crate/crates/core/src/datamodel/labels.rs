use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_csv, ByteCursor, DataError, FORMAT_VERSION};

pub const SNPL_MAGIC: &[u8; 4] = b"SNPL";
pub const SNPL_HEADER_LEN: usize = 20;

/// One applied label correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRecord {
    pub index: usize,
    pub old_label: u32,
    pub new_label: u32,
    /// Milliseconds since the Unix epoch, as supplied by the caller.
    pub timestamp: u64,
}

/// Class labels in `[0, classes)` together with the journal of edits applied
/// since ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    labels: Vec<u32>,
    original: Vec<u32>,
    classes: u32,
    journal: Vec<EditRecord>,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, classes: u32) -> Result<Self, DataError> {
        if classes < 2 {
            return Err(DataError::Malformed(format!("class count must be >= 2, got {classes}")));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(DataError::LabelOutOfRange {
                index,
                label: label as u64,
                classes,
            });
        }
        Ok(LabelVector {
            original: labels.clone(),
            labels,
            classes,
            journal: Vec::new(),
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn original(&self) -> &[u32] {
        &self.original
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn journal(&self) -> &[EditRecord] {
        &self.journal
    }

    /// Sets one label and appends the change to the journal. Returns the
    /// previous label.
    pub fn set_label(&mut self, index: usize, new_label: u32, timestamp: u64) -> Result<u32, DataError> {
        self.check_edit(index, new_label)?;
        let old_label = std::mem::replace(&mut self.labels[index], new_label);
        self.journal.push(EditRecord {
            index,
            old_label,
            new_label,
            timestamp,
        });
        Ok(old_label)
    }

    pub fn check_edit(&self, index: usize, new_label: u32) -> Result<(), DataError> {
        if index >= self.labels.len() {
            return Err(DataError::IndexOutOfRange {
                index,
                len: self.labels.len(),
            });
        }
        if new_label >= self.classes {
            return Err(DataError::LabelOutOfRange {
                index,
                label: new_label as u64,
                classes: self.classes,
            });
        }
        Ok(())
    }

    /// Applies `journal` on top of `base` without recording anything.
    pub fn replay(base: &[u32], journal: &[EditRecord]) -> Vec<u32> {
        let mut labels = base.to_vec();
        for rec in journal {
            if let Some(slot) = labels.get_mut(rec.index) {
                *slot = rec.new_label;
            }
        }
        labels
    }

    /// Empirical class frequencies, summing to one.
    pub fn class_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.classes as usize];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        let n = self.labels.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// Returns a copy with the given labels as the new original and an empty
    /// journal.
    pub fn with_labels(&self, labels: Vec<u32>) -> Result<Self, DataError> {
        LabelVector::new(labels, self.classes)
    }

    pub fn from_snpl_bytes(bytes: &[u8]) -> Result<Self, DataError> {
        let hdr = SNPL_HEADER_LEN as u64;
        if bytes.len() >= 4 && &bytes[..4] != SNPL_MAGIC {
            return Err(DataError::BadMagic { expected: "SNPL" });
        }
        let mut cur = ByteCursor::new(bytes);
        cur.take(4, hdr)?;
        let version = cur.u32(hdr)?;
        if version != FORMAT_VERSION {
            return Err(DataError::VersionUnsupported(version));
        }
        let n = cur.u64(hdr)?;
        let classes = cur.u32(hdr)?;
        let expected_payload = n
            .checked_mul(4)
            .filter(|&v| usize::try_from(v).is_ok())
            .ok_or_else(|| DataError::Malformed("label count overflows".into()))?;
        let payload = cur.remaining();
        if (payload.len() as u64) < expected_payload {
            return Err(DataError::TruncatedFile {
                expected: hdr + expected_payload,
                found: bytes.len() as u64,
            });
        }
        if payload.len() as u64 > expected_payload {
            return Err(DataError::TrailingBytes(payload.len() as u64 - expected_payload));
        }
        let labels: Vec<u32> = payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        LabelVector::new(labels, classes)
    }

    pub fn read_snpl<R: Read>(mut reader: R) -> Result<Self, DataError> {
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| DataError::io("<reader>", e))?;
        Self::from_snpl_bytes(&bytes)
    }

    /// Encodes the current labels.
    pub fn to_snpl_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SNPL_HEADER_LEN + 4 * self.labels.len());
        out.extend_from_slice(SNPL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.classes.to_le_bytes());
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    /// Parses labels separated by commas and/or newlines. The class count
    /// is `max(label) + 1`, at least 2.
    pub fn from_csv_str(text: &str) -> Result<Self, DataError> {
        let mut labels = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            for field in line.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                let label = field.parse::<u32>().map_err(|_| {
                    DataError::Malformed(format!("csv line {}: cannot parse label {field:?}", line_no + 1))
                })?;
                labels.push(label);
            }
        }
        let classes = labels.iter().max().map(|&m| m.saturating_add(1)).unwrap_or(2).max(2);
        LabelVector::new(labels, classes)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 3);
        for l in &self.labels {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<LabelVector, DataError> {
    let path = path.as_ref();
    if is_csv(path) {
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        return LabelVector::from_csv_str(&text);
    }
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    LabelVector::from_snpl_bytes(&bytes)
}

pub fn write_label_file(path: impl AsRef<Path>, labels: &LabelVector) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let bytes = if is_csv(path) {
        labels.to_csv_string().into_bytes()
    } else {
        labels.to_snpl_bytes()
    };
    writer
        .write_all(&bytes)
        .and_then(|_| writer.flush())
        .map_err(|e| DataError::io(path, e))
}

/// Returns `(n, classes)`, checking the file length against the header.
pub fn probe_label_shape(path: impl AsRef<Path>) -> Result<(usize, u32), DataError> {
    let path = path.as_ref();
    if is_csv(path) {
        let l = read_label_file(path)?;
        return Ok((l.len(), l.classes()));
    }
    let mut file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut header = Vec::with_capacity(SNPL_HEADER_LEN);
    (&mut file)
        .take(SNPL_HEADER_LEN as u64)
        .read_to_end(&mut header)
        .map_err(|e| DataError::io(path, e))?;
    let hdr = SNPL_HEADER_LEN as u64;
    if header.len() >= 4 && &header[..4] != SNPL_MAGIC {
        return Err(DataError::BadMagic { expected: "SNPL" });
    }
    let mut cur = ByteCursor::new(&header);
    cur.take(4, hdr)?;
    let version = cur.u32(hdr)?;
    if version != FORMAT_VERSION {
        return Err(DataError::VersionUnsupported(version));
    }
    let n = cur.u64(hdr)?;
    let classes = cur.u32(hdr)?;
    let expected = n
        .checked_mul(4)
        .and_then(|v| v.checked_add(hdr))
        .ok_or_else(|| DataError::Malformed("label count overflows".into()))?;
    let found = file.metadata().map_err(|e| DataError::io(path, e))?.len();
    if found < expected {
        return Err(DataError::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(DataError::TrailingBytes(found - expected));
    }
    Ok((n as usize, classes))
}
