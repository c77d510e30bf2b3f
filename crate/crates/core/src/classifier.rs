//! K-nearest-neighbour pain-change classification over per-image bone shape
//! features.
//!
//! Features are z-scored with training statistics; dimensions that are
//! constant on the training set are dropped. Neighbours are ranked by
//! Euclidean distance with ties going to the lower training index. A tied
//! vote goes to the tied class owning the nearest single neighbour.

use std::cmp::Ordering;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::{Bone, LabelMask};
use crate::morphometry::{compute_shape_features, ShapeFeatures};
use crate::pain::PainCategory;

pub const FEATURE_DIM: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "femur_circularity",
    "femur_eccentricity",
    "femur_area",
    "femur_perimeter",
    "tibia_circularity",
    "tibia_eccentricity",
    "tibia_area",
    "tibia_perimeter",
];

pub const DEFAULT_K: usize = 5;
pub const K_CANDIDATES: [usize; 5] = [1, 3, 5, 7, 9];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub image_id: String,
    pub values: [f64; FEATURE_DIM],
}

impl FeatureVector {
    pub fn new(image_id: impl Into<String>, values: [f64; FEATURE_DIM]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature {} is not finite: {}",
                FEATURE_NAMES[i], values[i]
            )));
        }
        Ok(Self {
            image_id: image_id.into(),
            values,
        })
    }

    pub fn from_shapes(
        image_id: impl Into<String>,
        femur: &ShapeFeatures,
        tibia: &ShapeFeatures,
    ) -> Result<Self> {
        Self::new(
            image_id,
            [
                femur.circularity,
                femur.eccentricity,
                femur.area,
                femur.perimeter,
                tibia.circularity,
                tibia.eccentricity,
                tibia.area,
                tibia.perimeter,
            ],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedImage {
    pub image_id: String,
    pub reason: String,
}

/// Shape-feature vectors for each `(image_id, mask)`; images where either
/// bone cannot be measured are skipped and reported.
pub fn build_features(
    masks: &[(String, LabelMask)],
) -> (Vec<FeatureVector>, Vec<SkippedImage>) {
    let mut out = Vec::with_capacity(masks.len());
    let mut skipped = Vec::new();
    for (id, mask) in masks {
        match features_for_mask(id, mask) {
            Ok(v) => out.push(v),
            Err(e) => {
                warn!("skipping {id}: {e}");
                skipped.push(SkippedImage {
                    image_id: id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    (out, skipped)
}

pub fn features_for_mask(image_id: &str, mask: &LabelMask) -> Result<FeatureVector> {
    let femur = compute_shape_features(mask, Bone::Femur)?;
    let tibia = compute_shape_features(mask, Bone::Tibia)?;
    FeatureVector::from_shapes(image_id, &femur, &tibia)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnModel {
    k: usize,
    /// Indices into the 8-dimensional feature vector that are used.
    kept_dims: Vec<usize>,
    dropped_dims: Vec<usize>,
    means: Vec<f64>,
    stds: Vec<f64>,
    train: Vec<Vec<f64>>,
    labels: Vec<PainCategory>,
}

fn is_constant(mean: f64, std: f64) -> bool {
    std == 0.0 || std <= 1e-12 * mean.abs()
}

pub fn fit_knn(features: &[FeatureVector], labels: &[PainCategory], k: usize) -> Result<KnnModel> {
    if features.is_empty() {
        return Err(Error::Empty("training set is empty"));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if k == 0 || k > features.len() {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            features.len()
        )));
    }
    let n = features.len() as f64;
    let mut kept_dims = Vec::new();
    let mut dropped_dims = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for d in 0..FEATURE_DIM {
        let mean = features.iter().map(|f| f.values[d]).sum::<f64>() / n;
        let var = features
            .iter()
            .map(|f| (f.values[d] - mean).powi(2))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        if is_constant(mean, std) {
            dropped_dims.push(d);
        } else {
            kept_dims.push(d);
            means.push(mean);
            stds.push(std);
        }
    }
    let mut model = KnnModel {
        k,
        kept_dims,
        dropped_dims,
        means,
        stds,
        train: Vec::with_capacity(features.len()),
        labels: labels.to_vec(),
    };
    model.train = features.iter().map(|f| model.scale(f)).collect();
    Ok(model)
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dropped_dims(&self) -> &[usize] {
        &self.dropped_dims
    }

    pub fn kept_dims(&self) -> &[usize] {
        &self.kept_dims
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn training_labels(&self) -> &[PainCategory] {
        &self.labels
    }

    /// Same model with a different neighbour count.
    pub fn with_k(&self, k: usize) -> Result<KnnModel> {
        if k == 0 || k > self.train.len() {
            return Err(Error::InvalidArgument(format!(
                "k must be in 1..={}, got {k}",
                self.train.len()
            )));
        }
        Ok(KnnModel { k, ..self.clone() })
    }

    /// Z-scored kept dimensions of `v`.
    pub fn scale(&self, v: &FeatureVector) -> Vec<f64> {
        self.kept_dims
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&d, (m, s))| (v.values[d] - m) / s)
            .collect()
    }

    /// The `k` nearest training points as `(index, squared distance)`,
    /// nearest first.
    pub fn neighbors(&self, v: &FeatureVector) -> Vec<(usize, f64)> {
        let q = self.scale(v);
        let mut d: Vec<(usize, f64)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, t)| (i, squared_distance(&q, t)))
            .collect();
        d.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        d.truncate(self.k);
        d
    }

    pub fn predict(&self, v: &FeatureVector) -> PainCategory {
        let nn = self.neighbors(v);
        let mut votes = [0usize; 3];
        for &(i, _) in &nn {
            votes[self.labels[i].index()] += 1;
        }
        let best = *votes.iter().max().expect("three classes");
        nn.iter()
            .map(|&(i, _)| self.labels[i])
            .find(|c| votes[c.index()] == best)
            .expect("k >= 1")
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Errors unless the labels contain at least two classes.
pub fn check_training_labels(labels: &[PainCategory]) -> Result<()> {
    match labels.first() {
        None => Err(Error::Empty("training labels are empty")),
        Some(first) if labels.iter().all(|l| l == first) => {
            Err(Error::DegenerateLabels { n: labels.len() })
        }
        Some(_) => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub category: PainCategory,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// No test samples of this class; excluded from the macro F1.
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// Macro F1 over classes present in the test labels, percent.
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Rows are true classes, columns predictions, both in
    /// [`PainCategory::ALL`] order.
    pub confusion: [[u64; 3]; 3],
    pub total: u64,
}

pub fn evaluate(
    model: &KnnModel,
    test_features: &[FeatureVector],
    test_labels: &[PainCategory],
) -> Result<ClassificationReport> {
    if test_features.len() != test_labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} test vectors but {} labels",
            test_features.len(),
            test_labels.len()
        )));
    }
    let predictions: Vec<PainCategory> = test_features.iter().map(|v| model.predict(v)).collect();
    report_from_predictions(test_labels, &predictions)
}

pub fn report_from_predictions(
    truth: &[PainCategory],
    predicted: &[PainCategory],
) -> Result<ClassificationReport> {
    if truth.is_empty() {
        return Err(Error::Empty("test set is empty"));
    }
    if truth.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut confusion = [[0u64; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    let total = truth.len() as u64;
    let trace: u64 = (0..3).map(|i| confusion[i][i]).sum();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };

    let per_class: Vec<ClassMetrics> = PainCategory::ALL
        .iter()
        .map(|&c| {
            let i = c.index();
            let tp = confusion[i][i];
            let support: u64 = confusion[i].iter().sum();
            let predicted_as: u64 = (0..3).map(|r| confusion[r][i]).sum();
            let precision = ratio(tp, predicted_as);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                category: c,
                precision,
                recall,
                f1,
                support,
                absent: support == 0,
            }
        })
        .collect();
    let present: Vec<f64> = per_class.iter().filter(|m| !m.absent).map(|m| m.f1).collect();
    let f1 = present.iter().sum::<f64>() / present.len() as f64;
    Ok(ClassificationReport {
        accuracy: ratio(trace, total),
        f1,
        per_class,
        confusion,
        total,
    })
}

/// Accuracy on the validation set for each candidate `k` not exceeding the
/// training size.
pub fn sweep_k(
    model: &KnnModel,
    val_features: &[FeatureVector],
    val_labels: &[PainCategory],
    candidates: &[usize],
) -> Result<Vec<(usize, f64)>> {
    candidates
        .iter()
        .filter(|&&k| k >= 1 && k <= model.len())
        .map(|&k| {
            let r = evaluate(&model.with_k(k)?, val_features, val_labels)?;
            Ok((k, r.accuracy))
        })
        .collect()
}

/// Best-accuracy `k` from a sweep. Ties prefer [`DEFAULT_K`], then the
/// smaller `k`. Falls back to `DEFAULT_K` clamped to the training size when
/// the sweep is empty.
pub fn choose_k(sweep: &[(usize, f64)], n_train: usize) -> usize {
    let Some(best) = sweep.iter().map(|s| s.1).max_by(f64::total_cmp) else {
        return DEFAULT_K.min(n_train).max(1);
    };
    let winners: Vec<usize> = sweep.iter().filter(|s| s.1 == best).map(|s| s.0).collect();
    if winners.contains(&DEFAULT_K) {
        DEFAULT_K
    } else {
        winners.into_iter().min().expect("non-empty sweep")
    }
}
