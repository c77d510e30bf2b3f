//! Batch commands behind the `osteomorph` binary.
//!
//! Each command reads a dataset manifest, processes images in parallel,
//! skips (and logs) images that cannot be processed, and writes CSV, JSON or
//! SVG files into the output directory.

pub mod classify;
pub mod config;
pub mod eval;
pub mod morph;
pub mod output;
pub mod plot;
pub mod synth;

use anyhow::{bail, Result};
use log::warn;
use osteomorph_core::classifier::SkippedImage;
use osteomorph_core::{load_mask, resize_nearest, DatasetManifest, LabelMask, ManifestEntry, Split};
use std::path::{Path, PathBuf};

pub use classify::cmd_classify;
pub use config::RunConfig;
pub use eval::cmd_eval;
pub use morph::cmd_morph;
pub use synth::cmd_synth;

/// What a command wrote and which images it had to leave out.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<SkippedImage>,
}

impl Outcome {
    pub fn is_partial(&self) -> bool {
        !self.skipped.is_empty()
    }
}

pub(crate) fn select_entries(manifest: &DatasetManifest, split: Option<Split>) -> Result<Vec<&ManifestEntry>> {
    let picked: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .collect();
    if picked.is_empty() {
        match split {
            Some(s) => bail!("no images selected (split {} is empty)", s.name()),
            None => bail!("no images selected"),
        }
    }
    Ok(picked)
}

/// Loads a mask and brings it to the working resolution.
pub(crate) fn load_working_mask(path: &Path, size: (u32, u32)) -> osteomorph_core::Result<LabelMask> {
    let mask = load_mask(path)?;
    resize_nearest(&mask, size.0, size.1)
}

pub(crate) fn skip(image_id: &str, reason: impl ToString) -> SkippedImage {
    let reason = reason.to_string();
    warn!("skipping {image_id}: {reason}");
    SkippedImage {
        image_id: image_id.to_owned(),
        reason,
    }
}
