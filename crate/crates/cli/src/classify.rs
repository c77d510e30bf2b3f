use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use osteomorph_core::classifier::{
    check_training_labels, choose_k, evaluate, features_for_mask, fit_knn, sweep_k, ClassificationReport,
    FeatureVector, KnnModel, SkippedImage, FEATURE_NAMES, K_CANDIDATES,
};
use osteomorph_core::{load_manifest, ManifestEntry, PainCategory, Split};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{fixed, OutputDir, Provenance};
use crate::{load_working_mask, skip, Outcome, RunConfig};

#[derive(Debug, Serialize)]
struct KScore {
    k: usize,
    accuracy: f64,
}

#[derive(Debug, Serialize)]
struct Prediction {
    image_id: String,
    truth: PainCategory,
    predicted: PainCategory,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    source: &'a str,
    k: usize,
    k_selected_on_val: bool,
    k_sweep: &'a [KScore],
    dropped_features: Vec<&'static str>,
    n_train: usize,
    n_val: usize,
    #[serde(flatten)]
    report: ClassificationReport,
    predictions: Vec<Prediction>,
    skipped: &'a [SkippedImage],
}

/// Labelled feature vectors for `entries`, computed from the mask chosen by
/// `mask_of`. Entries without a mask are ignored; unmeasurable ones skipped.
fn labelled_features<'e>(
    entries: &[&'e ManifestEntry],
    mask_of: impl Fn(&ManifestEntry) -> Option<&Path> + Sync,
    cfg: &RunConfig,
) -> (Vec<(&'e ManifestEntry, FeatureVector)>, Vec<SkippedImage>) {
    let results: Vec<_> = entries
        .par_iter()
        .filter_map(|e| mask_of(e).map(|p| (e, p)))
        .map(|(e, path)| {
            let r = load_working_mask(path, cfg.resize).and_then(|m| features_for_mask(&e.image_id, &m));
            (*e, r)
        })
        .collect();
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (e, r) in results {
        match r {
            Ok(f) => ok.push((e, f)),
            Err(err) => skipped.push(skip(&e.image_id, err)),
        }
    }
    (ok, skipped)
}

fn split_of(
    rows: &[(&ManifestEntry, FeatureVector)],
    split: Split,
) -> (Vec<FeatureVector>, Vec<PainCategory>) {
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for (e, f) in rows.iter().filter(|(e, _)| e.split == split) {
        feats.push(f.clone());
        labels.push(e.pain.as_ref().expect("filtered to labelled entries").category());
    }
    (feats, labels)
}

fn predictions(model: &KnnModel, feats: &[FeatureVector], labels: &[PainCategory]) -> Vec<Prediction> {
    feats
        .iter()
        .zip(labels)
        .map(|(f, &truth)| Prediction {
            image_id: f.image_id.clone(),
            truth,
            predicted: model.predict(f),
        })
        .collect()
}

/// Pain-change classification from shape features: fit on train, choose k
/// on val (unless fixed), report on test, for ground-truth masks and, when
/// present, predicted masks.
pub fn cmd_classify(cfg: &RunConfig) -> Result<Outcome> {
    let manifest = load_manifest(&cfg.manifest_path)
        .with_context(|| format!("loading manifest {}", cfg.manifest_path.display()))?;
    let mut outcome = Outcome::default();
    let labelled: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| {
            if e.pain.is_none() {
                outcome.skipped.push(skip(&e.image_id, "no pain scores"));
            }
            e.pain.is_some()
        })
        .collect();
    if labelled.is_empty() {
        bail!("no images selected: no manifest entry has pain scores");
    }

    let (gt_rows, gt_skipped) = labelled_features(&labelled, |e| Some(e.gt_mask.as_path()), cfg);
    outcome.skipped.extend(gt_skipped);
    let (train_x, train_y) = split_of(&gt_rows, Split::Train);
    let (val_x, val_y) = split_of(&gt_rows, Split::Val);
    let (test_x, test_y) = split_of(&gt_rows, Split::Test);
    if train_x.is_empty() {
        bail!("split train is empty");
    }
    if test_x.is_empty() {
        bail!("split test is empty");
    }
    check_training_labels(&train_y)?;

    let base = fit_knn(&train_x, &train_y, 1)?;
    let (k, sweep, selected) = match cfg.knn_k {
        Some(k) => {
            let clamped = k.min(train_x.len());
            if clamped != k {
                warn!("k={k} exceeds the {} training images; using {clamped}", train_x.len());
            }
            (clamped, Vec::new(), false)
        }
        None => {
            let sweep = if val_x.is_empty() {
                warn!("validation split is empty; using the default k");
                Vec::new()
            } else {
                sweep_k(&base, &val_x, &val_y, &K_CANDIDATES)?
            };
            let k = choose_k(&sweep, train_x.len());
            (k, sweep, !val_x.is_empty())
        }
    };
    let model = base.with_k(k)?;
    info!("classify: k={k}, {} train / {} val / {} test", train_x.len(), val_x.len(), test_x.len());
    let sweep: Vec<KScore> = sweep.into_iter().map(|(k, accuracy)| KScore { k, accuracy }).collect();
    let dropped: Vec<&'static str> = model.dropped_dims().iter().map(|&d| FEATURE_NAMES[d]).collect();

    let prov = Provenance::new("classify", cfg);
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut table = Vec::new();

    let gt_report = evaluate(&model, &test_x, &test_y)?;
    table.push(vec![
        "ground_truth".to_owned(),
        fixed(gt_report.accuracy, 2),
        fixed(gt_report.f1, 2),
    ]);
    out.json(
        "classification_gt.json",
        &prov,
        &RunReport {
            source: "ground_truth",
            k,
            k_selected_on_val: selected,
            k_sweep: &sweep,
            dropped_features: dropped.clone(),
            n_train: train_x.len(),
            n_val: val_x.len(),
            report: gt_report,
            predictions: predictions(&model, &test_x, &test_y),
            skipped: &[],
        },
    )?;

    // The pred run queries the same model (trained on ground-truth shapes)
    // with features measured on predicted masks of the test images.
    let test_entries: Vec<&ManifestEntry> = gt_rows
        .iter()
        .filter(|(e, _)| e.split == Split::Test)
        .map(|(e, _)| *e)
        .collect();
    if test_entries.iter().any(|e| e.pred_mask.is_some()) {
        let (pred_rows, pred_skipped) = labelled_features(&test_entries, |e| e.pred_mask.as_deref(), cfg);
        let (px, py) = split_of(&pred_rows, Split::Test);
        if px.is_empty() {
            warn!("no predicted test mask could be measured; skipping the {} run", cfg.model);
        } else {
            let report = evaluate(&model, &px, &py)?;
            table.push(vec![cfg.model.clone(), fixed(report.accuracy, 2), fixed(report.f1, 2)]);
            out.json(
                "classification_pred.json",
                &prov,
                &RunReport {
                    source: &cfg.model,
                    k,
                    k_selected_on_val: selected,
                    k_sweep: &sweep,
                    dropped_features: dropped,
                    n_train: train_x.len(),
                    n_val: val_x.len(),
                    report,
                    predictions: predictions(&model, &px, &py),
                    skipped: &pred_skipped,
                },
            )?;
        }
        outcome.skipped.extend(pred_skipped);
    }

    out.csv("classification_summary.csv", &prov, "", &["source", "acc", "f1"], &table)?;
    outcome.written = out.written();
    Ok(outcome)
}
