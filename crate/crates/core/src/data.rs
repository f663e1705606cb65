//! Datasets, CSV ingestion, stratified fold plans and the GAN pre-scaling.
//!
//! Labels are held as `1 = minority`, `0 = majority` regardless of how the
//! source file encodes them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::tensor::Tensor2D;

pub const MINORITY: u8 = 1;
pub const MAJORITY: u8 = 0;

/// Feature matrix with binary labels.
///
/// `row_ids` maps every row back to its index in the dataset it was
/// originally loaded as, so subsets can report provenance in terms of the
/// full table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    features: Tensor2D,
    labels: Vec<u8>,
    row_ids: Vec<usize>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Tensor2D, labels: Vec<u8>) -> Result<Self> {
        let row_ids = (0..labels.len()).collect();
        let feature_names = (0..features.cols()).map(|c| format!("x{c}")).collect();
        Self::with_parts(name.into(), feature_names, features, labels, row_ids)
    }

    fn with_parts(
        name: String,
        feature_names: Vec<String>,
        features: Tensor2D,
        labels: Vec<u8>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::shape("Dataset labels", features.rows(), labels.len()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::validation(format!("label {bad} is not binary")));
        }
        if !features.all_finite() {
            return Err(Error::validation(format!("{name}: non-finite feature value")));
        }
        let d = Self {
            name,
            feature_names,
            features,
            labels,
            row_ids,
        };
        if d.minority_count() == 0 || d.majority_count() == 0 {
            return Err(Error::validation(format!(
                "{}: both classes must be present (minority {}, majority {})",
                d.name,
                d.minority_count(),
                d.majority_count()
            )));
        }
        Ok(d)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::shape("feature names", self.n_features(), names.len()));
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &Tensor2D {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn minority_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == MINORITY).count()
    }

    pub fn majority_count(&self) -> usize {
        self.n_samples() - self.minority_count()
    }

    /// Row positions (in this dataset) of the minority class, ascending.
    pub fn minority_indices(&self) -> Vec<usize> {
        self.class_indices(MINORITY)
    }

    pub fn majority_indices(&self) -> Vec<usize> {
        self.class_indices(MAJORITY)
    }

    fn class_indices(&self, label: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn minority_features(&self) -> Tensor2D {
        self.features.select_rows(&self.minority_indices())
    }

    /// Rows at `indices` (positions in this dataset) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::with_parts(
            self.name.clone(),
            self.feature_names.clone(),
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.row_ids[i]).collect(),
        )
    }
}

/// Reads a headed, comma-separated file. Every column except
/// `label_column` must be numeric; rows whose label equals `minority_label`
/// form the minority class.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, minority_label: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let label_idx = headers.iter().position(|h| h == label_column).ok_or_else(|| {
        Error::validation(format!(
            "{}: label column {label_column:?} not found in header {headers:?}",
            path.display()
        ))
    })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let row = row + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                labels.push(if cell == minority_label { MINORITY } else { MAJORITY });
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                row,
                column: headers[col].clone(),
                message,
            };
            if cell.is_empty() {
                return Err(parse_err("missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(format!("{cell:?} is not numeric")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("{cell:?} is not finite")));
            }
            values.push(v);
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let features = Tensor2D::new(labels.len(), feature_names.len(), values)?;
    Dataset::new(name, features, labels)?.with_feature_names(feature_names)
}

/// `|majority| / |minority|`.
pub fn imbalance_ratio(d: &Dataset) -> Result<f64> {
    let (min, maj) = (d.minority_count(), d.majority_count());
    if min == 0 || maj == 0 {
        return Err(Error::validation("imbalance ratio needs both classes"));
    }
    Ok(maj as f64 / min as f64)
}

/// Fold assignment for repeated stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub n_shuffles: usize,
    pub seed: u64,
    /// `assignments[shuffle][row]` is the fold holding `row` in that shuffle.
    pub assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Held-out rows of one fold, ascending.
    pub fn test_indices(&self, shuffle: usize, fold: usize) -> Vec<usize> {
        self.assignments[shuffle]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Every row not in the given fold, ascending.
    pub fn train_indices(&self, shuffle: usize, fold: usize) -> Vec<usize> {
        self.assignments[shuffle]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Repeated stratified k-fold split.
///
/// For each shuffle both classes are Fisher–Yates shuffled with a stream
/// derived from `seed`, concatenated (minority first), and dealt round-robin
/// to the folds. Fold sizes and per-class counts differ by at most one, with
/// earlier folds taking the remainders.
pub fn stratified_kfold(d: &Dataset, n_folds: usize, n_shuffles: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds == 0 || n_shuffles == 0 {
        return Err(Error::validation("n_folds and n_shuffles must be at least 1"));
    }
    if d.minority_count() < n_folds {
        return Err(Error::validation(format!(
            "minority class has {} samples, fewer than {n_folds} folds",
            d.minority_count()
        )));
    }
    let assignments = (0..n_shuffles)
        .map(|s| {
            let mut rng = SplitMix64::new(derive_seed(seed, &[s as u64]));
            let mut minority = d.minority_indices();
            let mut majority = d.majority_indices();
            rng.shuffle(&mut minority);
            rng.shuffle(&mut majority);
            let mut fold_of = vec![0; d.n_samples()];
            for (k, &row) in minority.iter().chain(&majority).enumerate() {
                fold_of[row] = k % n_folds;
            }
            fold_of
        })
        .collect();
    Ok(FoldPlan {
        n_folds,
        n_shuffles,
        seed,
        assignments,
    })
}

/// Divisor used to map features into `[-1, 1]` before GAN training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInfo {
    pub alpha: f64,
}

impl ScaleInfo {
    /// `alpha = max(1, 1.1 * max_row ||x||_inf)`.
    pub fn from_features(features: &Tensor2D) -> Self {
        Self {
            alpha: (1.1 * features.max_abs()).max(1.0),
        }
    }

    pub fn scale(&self, features: &Tensor2D) -> Tensor2D {
        features.map(|v| v / self.alpha)
    }

    pub fn unscale(&self, features: &Tensor2D) -> Tensor2D {
        features.map(|v| v * self.alpha)
    }
}

pub fn compute_alpha(d: &Dataset) -> ScaleInfo {
    ScaleInfo::from_features(d.features())
}
