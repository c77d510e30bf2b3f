use anyhow::{bail, Context, Result};
use log::{info, warn};
use osteomorph_core::mask::load_prob_map;
use osteomorph_core::seg_metrics::score_masks;
use osteomorph_core::{aggregate_metrics, load_manifest, load_mask, resize_nearest, sparse_ce_loss, SegMetrics};
use rayon::prelude::*;

use crate::output::{fixed, OutputDir, Provenance};
use crate::{select_entries, skip, Outcome, RunConfig};

struct Scored {
    image_id: String,
    /// One entry per configured bone, same order.
    metrics: Vec<SegMetrics>,
    loss: Option<f64>,
}

/// Segmentation metrics of predicted masks against ground truth, per image
/// and aggregated per bone.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Outcome> {
    let manifest = load_manifest(&cfg.manifest_path)
        .with_context(|| format!("loading manifest {}", cfg.manifest_path.display()))?;
    let entries = select_entries(&manifest, cfg.split)?;

    let mut outcome = Outcome::default();
    let with_pred: Vec<_> = entries
        .into_iter()
        .filter_map(|e| match &e.pred_mask {
            Some(p) => Some((e, p)),
            None => {
                outcome.skipped.push(skip(&e.image_id, "missing pred mask"));
                None
            }
        })
        .collect();
    if with_pred.is_empty() {
        bail!("no images selected: no selected entry has a predicted mask");
    }
    info!("eval: {} images", with_pred.len());

    let results: Vec<_> = with_pred
        .par_iter()
        .map(|(e, pred_path)| -> Result<Scored> {
            let gt = load_mask(&e.gt_mask)?;
            let pred = load_mask(pred_path)?;
            gt.same_dims(&pred)?;
            let loss = match &e.prob_map {
                Some(p) => Some(sparse_ce_loss(&load_prob_map(p)?, &gt)?),
                None => None,
            };
            let gt = resize_nearest(&gt, cfg.resize.0, cfg.resize.1)?;
            let pred = resize_nearest(&pred, cfg.resize.0, cfg.resize.1)?;
            let metrics = cfg
                .bones
                .iter()
                .map(|&b| score_masks(&pred, &gt, b))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Scored {
                image_id: e.image_id.clone(),
                metrics,
                loss,
            })
        })
        .collect();
    let mut scored = Vec::new();
    for ((e, _), r) in with_pred.iter().zip(results) {
        match r {
            Ok(s) => scored.push(s),
            Err(err) => outcome.skipped.push(skip(&e.image_id, format!("{err:#}"))),
        }
    }
    if scored.is_empty() {
        bail!("every selected image failed; nothing to aggregate");
    }

    let prov = Provenance::new("eval", cfg);
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let agg_note = format!("aggregation={}", cfg.aggregation);

    let mut per_image = Vec::new();
    for s in &scored {
        for m in &s.metrics {
            per_image.push(vec![
                s.image_id.clone(),
                m.counts.bone.to_string(),
                fixed(m.acc, 4),
                fixed(m.precision, 4),
                fixed(m.recall, 4),
                fixed(m.dice, 4),
                fixed(m.iou, 4),
                m.degenerate.to_string(),
            ]);
        }
    }
    out.csv(
        "metrics_per_image.csv",
        &prov,
        "",
        &["image_id", "bone", "acc", "precision", "recall", "dice", "iou", "degenerate"],
        &per_image,
    )?;

    let mut summary = Vec::new();
    for (i, bone) in cfg.bones.iter().enumerate() {
        let column: Vec<SegMetrics> = scored.iter().map(|s| s.metrics[i]).collect();
        let a = aggregate_metrics(&column, cfg.aggregation)?;
        if a.degenerate.any() {
            warn!("{bone}: aggregate has undefined ratios ({}), reported as 0", a.degenerate);
        }
        summary.push(vec![
            cfg.model.clone(),
            bone.to_string(),
            fixed(a.acc, 2),
            fixed(a.precision, 2),
            fixed(a.recall, 2),
            fixed(a.dice, 2),
            fixed(a.iou, 2),
        ]);
    }
    out.csv(
        "metrics.csv",
        &prov,
        &agg_note,
        &["model", "bone", "acc", "precision", "recall", "dice", "iou"],
        &summary,
    )?;

    let losses: Vec<(&str, f64)> = scored
        .iter()
        .filter_map(|s| s.loss.map(|l| (s.image_id.as_str(), l)))
        .collect();
    if !losses.is_empty() {
        let mean = losses.iter().map(|l| l.1).sum::<f64>() / losses.len() as f64;
        let mut rows: Vec<Vec<String>> = losses
            .iter()
            .map(|(id, l)| vec![id.to_string(), fixed(*l, 6)])
            .collect();
        rows.push(vec!["mean".to_owned(), fixed(mean, 6)]);
        out.csv("loss.csv", &prov, "", &["image_id", "sparse_ce"], &rows)?;
    }

    outcome.written = out.written();
    Ok(outcome)
}
