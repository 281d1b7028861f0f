//! Seeded synthetic data: two Gaussian blobs in the plane, optionally
//! written out as a complete study directory.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::datamodel::{
    write_embedding_file, write_label_file, Budget, DataError, EmbeddingMatrix, LabelVector, Metric, Strategy,
    StudyManifest, TransformationSpec,
};
use crate::noise::inject_uniform_noise;

/// `n` points, class 0 centred at (-1, -1) and class 1 at (1, 1), identity
/// covariance, balanced classes in alternating order.
pub fn gaussian_blobs(id: &str, n: usize, seed: u64) -> (EmbeddingMatrix, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u32;
        let mean = if y == 0 { -1.0 } else { 1.0 };
        for _ in 0..2 {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push((mean + z) as f32);
        }
        labels.push(y);
    }
    let matrix = EmbeddingMatrix::new(id, n, 2, values).expect("finite samples");
    let labels = LabelVector::new(labels, 2).expect("binary labels");
    (matrix, labels)
}

/// Appends `extra` N(0, sd²) columns to every row.
pub fn with_noise_columns(m: &EmbeddingMatrix, extra: usize, sd: f64, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = m.dim() + extra;
    let mut values = Vec::with_capacity(m.n_rows() * dim);
    for r in 0..m.n_rows() {
        values.extend_from_slice(m.row(r));
        for _ in 0..extra {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push((sd * z) as f32);
        }
    }
    EmbeddingMatrix::new(m.transformation_id(), m.n_rows(), dim, values).expect("finite samples")
}

/// Shape of a synthetic blob study.
#[derive(Debug, Clone)]
pub struct BlobStudy {
    pub n_train: usize,
    pub n_test: usize,
    /// Uniform label noise applied to both splits.
    pub rho: f64,
    pub seed: u64,
    pub target_accuracy: f64,
    /// Also write a worse transformation: the blobs plus four noise columns.
    pub distractor: bool,
    pub batch_fraction: f64,
    pub strategy: Strategy,
}

impl Default for BlobStudy {
    fn default() -> Self {
        BlobStudy {
            n_train: 2000,
            n_test: 500,
            rho: 0.0,
            seed: 0,
            target_accuracy: 0.9,
            distractor: false,
            batch_fraction: 0.05,
            strategy: Strategy::SuccessiveHalvingTangent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlobStudyFiles {
    pub manifest: PathBuf,
    pub clean_train_labels: PathBuf,
    pub clean_test_labels: PathBuf,
}

/// Writes embeddings, noisy labels, clean reference labels and a manifest
/// with relative paths into `dir`.
pub fn write_blob_study(dir: &Path, spec: &BlobStudy) -> Result<BlobStudyFiles, DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let (train, train_y) = gaussian_blobs("raw", spec.n_train, spec.seed);
    let (test, test_y) = gaussian_blobs("raw", spec.n_test, spec.seed.wrapping_add(1));
    let noisy_train = inject_uniform_noise(&train_y, spec.rho, spec.seed.wrapping_add(2)).expect("rho in [0, 1]");
    let noisy_test = inject_uniform_noise(&test_y, spec.rho, spec.seed.wrapping_add(3)).expect("rho in [0, 1]");

    write_embedding_file(dir.join("raw_train.snpe"), &train)?;
    write_embedding_file(dir.join("raw_test.snpe"), &test)?;
    write_label_file(dir.join("train.snpl"), &noisy_train)?;
    write_label_file(dir.join("test.snpl"), &noisy_test)?;
    write_label_file(dir.join("train_clean.snpl"), &train_y)?;
    write_label_file(dir.join("test_clean.snpl"), &test_y)?;

    let spec_for = |id: &str| TransformationSpec {
        transformation_id: id.to_string(),
        train_path: format!("{id}_train.snpe").into(),
        test_path: format!("{id}_test.snpe").into(),
        metric: Metric::Euclidean,
    };
    let mut transformations = vec![spec_for("raw")];
    if spec.distractor {
        let tr = with_noise_columns(&train, 4, 1.5, spec.seed.wrapping_add(4));
        let te = with_noise_columns(&test, 4, 1.5, spec.seed.wrapping_add(5));
        write_embedding_file(dir.join("distractor_train.snpe"), &tr)?;
        write_embedding_file(dir.join("distractor_test.snpe"), &te)?;
        transformations.push(spec_for("distractor"));
    }
    let manifest = StudyManifest {
        transformations,
        train_labels: "train.snpl".into(),
        test_labels: "test.snpl".into(),
        target_accuracy: spec.target_accuracy,
        batch_fraction: spec.batch_fraction,
        strategy: spec.strategy,
        budget: Budget::Auto,
        seed: spec.seed,
        shuffle: false,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json_string()).map_err(|source| DataError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(BlobStudyFiles {
        manifest: path,
        clean_train_labels: dir.join("train_clean.snpl"),
        clean_test_labels: dir.join("test_clean.snpl"),
    })
}
