use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{probe_embedding_shape, probe_label_shape, DataError};

/// Dissimilarity used for nearest-neighbour search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    #[serde(rename = "euclidean", alias = "Euclidean")]
    Euclidean,
    #[serde(
        rename = "cosine",
        alias = "Cosine",
        alias = "CosineDissimilarity",
        alias = "cosine_dissimilarity"
    )]
    CosineDissimilarity,
}

/// How pulls are allocated across transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "SH")]
    SuccessiveHalving,
    #[default]
    #[serde(rename = "SH_TANGENT")]
    SuccessiveHalvingTangent,
    #[serde(rename = "UNIFORM")]
    Uniform,
    #[serde(rename = "PERFECT")]
    Perfect,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SuccessiveHalving => "SH",
            Strategy::SuccessiveHalvingTangent => "SH_TANGENT",
            Strategy::Uniform => "UNIFORM",
            Strategy::Perfect => "PERFECT",
        })
    }
}

/// Total pull budget; `Auto` enables the doubling trick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Budget {
    #[default]
    Auto,
    Pulls(usize),
}

impl Serialize for Budget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Budget::Auto => s.serialize_str("AUTO"),
            Budget::Pulls(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pulls(u64),
            Keyword(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pulls(n) => usize::try_from(n)
                .map(Budget::Pulls)
                .map_err(|_| serde::de::Error::custom("budget too large")),
            Repr::Keyword(k) if k.eq_ignore_ascii_case("auto") => Ok(Budget::Auto),
            Repr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "budget must be a pull count or \"AUTO\", got {k:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformationSpec {
    pub transformation_id: String,
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    #[serde(default)]
    pub metric: Metric,
}

fn default_batch_fraction() -> f64 {
    0.05
}

/// Everything needed to run one feasibility study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyManifest {
    pub transformations: Vec<TransformationSpec>,
    pub train_labels: PathBuf,
    pub test_labels: PathBuf,
    pub target_accuracy: f64,
    #[serde(default = "default_batch_fraction")]
    pub batch_fraction: f64,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    /// Stream training rows in a seed-driven permutation instead of file order.
    #[serde(default)]
    pub shuffle: bool,
}

impl StudyManifest {
    /// Parses and validates field values. File references are left untouched.
    pub fn from_json_str(text: &str) -> Result<Self, DataError> {
        let manifest: StudyManifest =
            serde_json::from_str(text).map_err(|e| DataError::InvalidManifest(e.to_string()))?;
        manifest.validate_values()?;
        Ok(manifest)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate_values(&self) -> Result<(), DataError> {
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(DataError::InvalidTarget(self.target_accuracy));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(DataError::InvalidBatchFraction(self.batch_fraction));
        }
        if self.transformations.is_empty() {
            return Err(DataError::InvalidManifest("no transformations listed".into()));
        }
        let mut ids: Vec<&str> = self
            .transformations
            .iter()
            .map(|t| t.transformation_id.as_str())
            .collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(DataError::InvalidManifest(format!(
                "duplicate transformation id {:?}",
                w[0]
            )));
        }
        if let Budget::Pulls(0) = self.budget {
            return Err(DataError::InvalidManifest("budget must be positive".into()));
        }
        Ok(())
    }

    /// Rewrites every relative path to be relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.train_labels);
        fix(&mut self.test_labels);
        for t in &mut self.transformations {
            fix(&mut t.train_path);
            fix(&mut t.test_path);
        }
    }

    /// Checks that all files exist and that their shapes agree. Returns
    /// `(n_train, n_test, classes)`.
    pub fn validate_files(&self) -> Result<(usize, usize, u32), DataError> {
        let (n_train, c_train) = probe_label_shape(&self.train_labels)?;
        let (n_test, c_test) = probe_label_shape(&self.test_labels)?;
        if n_train == 0 || n_test == 0 {
            return Err(DataError::InvalidManifest("label files must be non-empty".into()));
        }
        let classes = c_train.max(c_test);
        for t in &self.transformations {
            let mismatch = |detail: String| DataError::ShapeMismatch {
                transformation_id: t.transformation_id.clone(),
                detail,
            };
            let (tr_rows, tr_dim) = probe_embedding_shape(&t.train_path)?;
            let (te_rows, te_dim) = probe_embedding_shape(&t.test_path)?;
            if tr_rows != n_train {
                return Err(mismatch(format!(
                    "train matrix has {tr_rows} rows, train labels have {n_train}"
                )));
            }
            if te_rows != n_test {
                return Err(mismatch(format!(
                    "test matrix has {te_rows} rows, test labels have {n_test}"
                )));
            }
            if tr_dim != te_dim {
                return Err(mismatch(format!("train dim {tr_dim} differs from test dim {te_dim}")));
            }
        }
        Ok((n_train, n_test, classes))
    }
}

/// Reads a manifest, resolves paths relative to its directory and
/// cross-validates every referenced file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<StudyManifest, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut manifest = StudyManifest::from_json_str(&text).map_err(|e| match e {
        DataError::InvalidManifest(m) => DataError::InvalidManifest(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest.resolve_paths(base);
    manifest.validate_files()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "transformations": [{"transformation_id": "raw", "train_path": "a.snpe", "test_path": "b.snpe"}],
        "train_labels": "tr.snpl", "test_labels": "te.snpl", "target_accuracy": 0.9
    }"#;

    #[test]
    fn defaults_fill_in() {
        let m = StudyManifest::from_json_str(MINIMAL).unwrap();
        assert_eq!(m.strategy, Strategy::SuccessiveHalvingTangent);
        assert_eq!(m.budget, Budget::Auto);
        assert_eq!(m.batch_fraction, 0.05);
        assert_eq!(m.transformations[0].metric, Metric::Euclidean);
    }

    #[test]
    fn budget_and_strategy_spellings() {
        let text = MINIMAL.replace(
            "\"target_accuracy\": 0.9",
            "\"target_accuracy\": 0.9, \"budget\": 64, \"strategy\": \"UNIFORM\"",
        );
        let m = StudyManifest::from_json_str(&text).unwrap();
        assert_eq!(m.budget, Budget::Pulls(64));
        assert_eq!(m.strategy, Strategy::Uniform);
        let round: StudyManifest = serde_json::from_str(&m.to_json_string()).unwrap();
        assert_eq!(round, m);
        let bad = MINIMAL.replace(
            "\"target_accuracy\": 0.9",
            "\"target_accuracy\": 0.9, \"budget\": \"lots\"",
        );
        assert!(StudyManifest::from_json_str(&bad).is_err());
    }

    #[test]
    fn invalid_target_rejected() {
        let text = MINIMAL.replace("0.9", "1.5");
        assert!(matches!(
            StudyManifest::from_json_str(&text),
            Err(DataError::InvalidTarget(t)) if t == 1.5
        ));
        let text = MINIMAL.replace("0.9", "0");
        assert!(matches!(
            StudyManifest::from_json_str(&text),
            Err(DataError::InvalidTarget(_))
        ));
    }

    #[test]
    fn cosine_aliases() {
        for name in ["cosine", "CosineDissimilarity"] {
            let text = MINIMAL.replace(
                "\"test_path\": \"b.snpe\"",
                &format!("\"test_path\": \"b.snpe\", \"metric\": \"{name}\""),
            );
            let m = StudyManifest::from_json_str(&text).unwrap();
            assert_eq!(m.transformations[0].metric, Metric::CosineDissimilarity);
        }
    }
}
