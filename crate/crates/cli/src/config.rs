//! Run configuration. Values come from, in increasing precedence: built-in
//! defaults, a `key=value` config file, command-line flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use osteomorph_core::{AggregationMode, Bone, Split};
use sha2::{Digest, Sha256};

pub const DEFAULT_RESIZE: (u32, u32) = (640, 640);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest_path: PathBuf,
    pub output_dir: PathBuf,
    pub bones: Vec<Bone>,
    pub aggregation: AggregationMode,
    pub knn_k: Option<usize>,
    pub resize: (u32, u32),
    pub emit_plots: bool,
    /// `None` selects every split.
    pub split: Option<Split>,
    /// Row label for predicted-mask results.
    pub model: String,
}

/// Optional settings as read from a config file or from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub bones: Option<Vec<Bone>>,
    pub agg: Option<AggregationMode>,
    pub k: Option<usize>,
    pub resize: Option<(u32, u32)>,
    pub plots: Option<bool>,
    pub split: Option<SplitChoice>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    All,
    Only(Split),
}

impl Overrides {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: Overrides) -> Overrides {
        Overrides {
            manifest: other.manifest.or(self.manifest),
            out: other.out.or(self.out),
            bones: other.bones.or(self.bones),
            agg: other.agg.or(self.agg),
            k: other.k.or(self.k),
            resize: other.resize.or(self.resize),
            plots: other.plots.or(self.plots),
            split: other.split.or(self.split),
            model: other.model.or(self.model),
        }
    }

    pub fn parse_file(path: &Path) -> Result<Overrides> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let mut o = Overrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("{}:{}: bad value for {key}", path.display(), n + 1);
            match key {
                "manifest" => o.manifest = Some(base.join(value)),
                "out" => o.out = Some(base.join(value)),
                "bones" => o.bones = Some(parse_bones(value).with_context(ctx)?),
                "agg" => o.agg = Some(parse_agg(value).with_context(ctx)?),
                "k" => o.k = Some(value.parse().with_context(ctx)?),
                "resize" => o.resize = Some(parse_dims(value).with_context(ctx)?),
                "plots" => o.plots = Some(parse_bool(value).with_context(ctx)?),
                "split" => o.split = Some(parse_split(value).with_context(ctx)?),
                "model" => o.model = Some(value.to_owned()),
                other => bail!("{}:{}: unknown key {other:?}", path.display(), n + 1),
            }
        }
        Ok(o)
    }

    /// Fills unset fields with defaults; `default_split` depends on the command.
    pub fn resolve(self, default_split: SplitChoice) -> Result<RunConfig> {
        let manifest_path = self.manifest.ok_or_else(|| anyhow!("--manifest is required"))?;
        let output_dir = self.out.ok_or_else(|| anyhow!("--out is required"))?;
        let bones = self.bones.unwrap_or_else(|| Bone::ALL.to_vec());
        if bones.is_empty() {
            bail!("at least one bone must be selected");
        }
        if self.k == Some(0) {
            bail!("k must be at least 1");
        }
        let split = match self.split.unwrap_or(default_split) {
            SplitChoice::All => None,
            SplitChoice::Only(s) => Some(s),
        };
        Ok(RunConfig {
            manifest_path,
            output_dir,
            bones,
            aggregation: self.agg.unwrap_or_default(),
            knn_k: self.k,
            resize: self.resize.unwrap_or(DEFAULT_RESIZE),
            emit_plots: self.plots.unwrap_or(false),
            split,
            model: self.model.unwrap_or_else(|| "pred".to_owned()),
        })
    }
}

impl RunConfig {
    /// Canonical text of every setting that affects results. The output
    /// directory is excluded so identical runs into different directories
    /// produce identical files.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let bones: Vec<&str> = self.bones.iter().map(|b| b.name()).collect();
        let _ = write!(
            s,
            "manifest={};bones={};agg={};k={};resize={}x{};plots={};split={};model={}",
            self.manifest_path.display(),
            bones.join(","),
            self.aggregation,
            self.knn_k.map(|k| k.to_string()).unwrap_or_else(|| "auto".into()),
            self.resize.0,
            self.resize.1,
            self.emit_plots,
            self.split.map(|s| s.name()).unwrap_or("all"),
            self.model,
        );
        s
    }

    /// First 16 hex digits of SHA-256 over [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_bones(s: &str) -> Result<Vec<Bone>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let bone = Bone::from_name(part).ok_or_else(|| anyhow!("unknown bone {part:?}"))?;
        if !out.contains(&bone) {
            out.push(bone);
        }
    }
    if out.is_empty() {
        bail!("no bones given");
    }
    out.sort();
    Ok(out)
}

pub fn parse_agg(s: &str) -> Result<AggregationMode> {
    AggregationMode::from_name(s).ok_or_else(|| anyhow!("aggregation must be macro or micro, got {s:?}"))
}

pub fn parse_dims(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let (w, h): (u32, u32) = (w.trim().parse()?, h.trim().parse()?);
    if w == 0 || h == 0 {
        bail!("dimensions must be positive, got {s:?}");
    }
    Ok((w, h))
}

pub fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("expected a boolean, got {s:?}"),
    }
}

pub fn parse_split(s: &str) -> Result<SplitChoice> {
    if s == "all" {
        return Ok(SplitChoice::All);
    }
    Split::from_name(s)
        .map(SplitChoice::Only)
        .ok_or_else(|| anyhow!("split must be all, train, val or test, got {s:?}"))
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected X,Y, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}
