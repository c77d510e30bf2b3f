use anyhow::{Context, Result};
use log::{info, warn};
use osteomorph_core::morphometry::ShapeMetric;
use osteomorph_core::{compute_shape_features, group_stats, load_manifest, PainCategory, ShapeFeatures};
use rayon::prelude::*;

use crate::output::{fixed, OutputDir, Provenance};
use crate::plot::group_bar_chart;
use crate::{load_working_mask, select_entries, skip, Outcome, RunConfig};

const PER_BONE_COLUMNS: [&str; 6] = [
    "area_px2",
    "perimeter_px",
    "circularity",
    "semi_major_px",
    "semi_minor_px",
    "eccentricity",
];

struct Measured {
    image_id: String,
    category: Option<PainCategory>,
    shapes: Vec<ShapeFeatures>,
}

/// Shape features per image (one row, one column group per bone) and
/// per-group statistics; optional bar charts.
pub fn cmd_morph(cfg: &RunConfig) -> Result<Outcome> {
    let manifest = load_manifest(&cfg.manifest_path)
        .with_context(|| format!("loading manifest {}", cfg.manifest_path.display()))?;
    let entries = select_entries(&manifest, cfg.split)?;
    info!("morph: {} images", entries.len());

    let results: Vec<_> = entries
        .par_iter()
        .map(|e| {
            let mask = load_working_mask(&e.gt_mask, cfg.resize)?;
            let shapes = cfg
                .bones
                .iter()
                .map(|&b| compute_shape_features(&mask, b).map_err(|err| format!("{b}: {err}")))
                .collect::<Result<Vec<_>, String>>()
                .map_err(anyhow::Error::msg)?;
            Ok::<_, anyhow::Error>(Measured {
                image_id: e.image_id.clone(),
                category: e.pain.as_ref().map(|p| p.category()),
                shapes,
            })
        })
        .collect();

    let mut outcome = Outcome::default();
    let mut measured = Vec::new();
    for (e, r) in entries.iter().zip(results) {
        match r {
            Ok(m) => measured.push(m),
            Err(err) => outcome.skipped.push(skip(&e.image_id, format!("{err:#}"))),
        }
    }

    let prov = Provenance::new("morph", cfg);
    let mut out = OutputDir::create(&cfg.output_dir)?;

    let mut header = vec!["image_id".to_owned(), "pain_category".to_owned()];
    for bone in &cfg.bones {
        header.extend(PER_BONE_COLUMNS.iter().map(|c| format!("{bone}_{c}")));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = measured
        .iter()
        .map(|m| {
            let mut row = vec![
                m.image_id.clone(),
                m.category.map(|c| c.name().to_owned()).unwrap_or_default(),
            ];
            for f in &m.shapes {
                row.extend(
                    [f.area, f.perimeter, f.circularity, f.semi_major, f.semi_minor, f.eccentricity]
                        .iter()
                        .map(|&v| fixed(v, 6)),
                );
            }
            row
        })
        .collect();
    out.csv("features.csv", &prov, "", &header, &rows)?;

    let records: Vec<(ShapeFeatures, PainCategory)> = measured
        .iter()
        .filter_map(|m| m.category.map(|c| (m, c)))
        .flat_map(|(m, c)| m.shapes.iter().map(move |f| (*f, c)))
        .collect();
    let stats = if records.is_empty() {
        warn!("no selected image has pain scores; group statistics are empty");
        Vec::new()
    } else {
        group_stats(&records)?
    };
    let stat_rows: Vec<Vec<String>> = stats
        .iter()
        .map(|g| {
            vec![
                g.bone.to_string(),
                g.category.name().to_owned(),
                g.metric.to_string(),
                fixed(g.mean, 6),
                fixed(g.std, 6),
                g.n.to_string(),
            ]
        })
        .collect();
    out.csv(
        "group_stats.csv",
        &prov,
        "",
        &["bone", "pain_category", "metric", "mean", "std", "n"],
        &stat_rows,
    )?;

    if cfg.emit_plots {
        for &bone in &cfg.bones {
            for metric in ShapeMetric::ALL {
                let svg = group_bar_chart(&stats, bone, metric);
                out.svg(&format!("{bone}_{metric}.svg"), &prov, &svg)?;
            }
        }
    }
    outcome.written = out.written();
    Ok(outcome)
}
