use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use osteomorph_core::synth::{write_demo_dataset, SyntheticSpec};
use osteomorph_core::write_mask;

/// Rasterizes `spec` and writes it as a mask image (format from the
/// extension of `out`).
pub fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<()> {
    let mask = spec.render()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    write_mask(&mask, out)?;
    Ok(())
}

/// Writes a small labelled dataset with identical ground-truth and
/// predicted masks; returns the manifest path.
pub fn cmd_synth_demo(dir: &Path, per_category: usize) -> Result<PathBuf> {
    Ok(write_demo_dataset(dir, per_category)?)
}
