use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use osteomorph::config::{self, Overrides, SplitChoice};
use osteomorph::synth::cmd_synth_demo;
use osteomorph::{cmd_classify, cmd_eval, cmd_morph, cmd_synth, Outcome};
use osteomorph_core::synth::{Shape, SyntheticSpec};
use osteomorph_core::{AggregationMode, Bone, Split};

/// Knee bone morphometry from femur/tibia label masks.
///
/// Exit status: 0 on success, 1 when some images were skipped, 2 on
/// configuration or input errors.
#[derive(Parser)]
#[command(name = "osteomorph", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shape features and per-pain-group statistics.
    Morph(RunArgs),
    /// Segmentation metrics of predicted masks.
    Eval(RunArgs),
    /// KNN pain-change classification from shape features.
    Classify(RunArgs),
    /// Rasterize a synthetic shape, or write a demo dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key=value file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated: femur,tibia.
    #[arg(long)]
    bones: Option<String>,
    #[arg(long, value_parser = config::parse_agg)]
    agg: Option<AggregationMode>,
    /// Fixed number of neighbours; otherwise chosen on the val split.
    #[arg(long)]
    k: Option<usize>,
    /// Emit SVG plots (morph).
    #[arg(long)]
    plots: bool,
    /// Working resolution WIDTHxHEIGHT [default: 640x640].
    #[arg(long, value_parser = config::parse_dims)]
    resize: Option<(u32, u32)>,
    /// all, train, val or test [default: all for morph, test for eval].
    #[arg(long, value_parser = config::parse_split)]
    split: Option<SplitChoice>,
    /// Name of the predicted-mask source in reports [default: pred].
    #[arg(long)]
    model: Option<String>,
}

impl RunArgs {
    fn resolve(self, default_split: SplitChoice) -> Result<config::RunConfig> {
        let file = match &self.config {
            Some(p) => Overrides::parse_file(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            manifest: self.manifest,
            out: self.out,
            bones: self.bones.as_deref().map(config::parse_bones).transpose()?,
            agg: self.agg,
            k: self.k,
            resize: self.resize,
            plots: self.plots.then_some(true),
            split: self.split,
            model: self.model,
        };
        file.overlay(flags).resolve(default_split)
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ShapeKind {
    Disk,
    Ellipse,
    Rect,
}

#[derive(Args)]
struct SynthArgs {
    /// Output mask file (.png/.pgm), or directory with --demo.
    #[arg(long)]
    out: PathBuf,
    /// Write a demo dataset (masks, probability maps, manifest.csv).
    #[arg(long, conflicts_with = "shape")]
    demo: bool,
    /// Demo images per pain category.
    #[arg(long, default_value_t = 4)]
    per_category: usize,
    #[arg(long, value_enum, required_unless_present = "demo")]
    shape: Option<ShapeKind>,
    /// Disk radius in pixels.
    #[arg(long)]
    radius: Option<f64>,
    /// Ellipse semi-axes A,B in pixels.
    #[arg(long, value_parser = config::parse_pair)]
    axes: Option<(f64, f64)>,
    /// Ellipse rotation in degrees.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    /// Rectangle sides W,H in pixels.
    #[arg(long, value_parser = config::parse_pair)]
    sides: Option<(f64, f64)>,
    /// Shape center X,Y [default: canvas center].
    #[arg(long, value_parser = config::parse_pair)]
    center: Option<(f64, f64)>,
    #[arg(long, default_value = "femur", value_parser = |s: &str| Bone::from_name(s).ok_or_else(|| format!("unknown bone {s:?}")))]
    label: Bone,
    #[arg(long, default_value = "640x640", value_parser = config::parse_dims)]
    canvas: (u32, u32),
}

impl SynthArgs {
    fn spec(&self) -> Result<SyntheticSpec> {
        let shape = match self.shape {
            Some(ShapeKind::Disk) => Shape::Disk {
                radius: self.radius.ok_or_else(|| anyhow::anyhow!("--radius is required for a disk"))?,
            },
            Some(ShapeKind::Ellipse) => {
                let Some((a, b)) = self.axes else {
                    bail!("--axes is required for an ellipse");
                };
                Shape::Ellipse {
                    semi_x: a,
                    semi_y: b,
                    angle_deg: self.angle,
                }
            }
            Some(ShapeKind::Rect) => {
                let Some((w, h)) = self.sides else {
                    bail!("--sides is required for a rect");
                };
                Shape::Rect { width: w, height: h }
            }
            None => bail!("--shape is required"),
        };
        let (w, h) = self.canvas;
        let center = self
            .center
            .unwrap_or(((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0));
        Ok(SyntheticSpec::new(shape, center, self.label, self.canvas))
    }
}

fn report(outcome: &Outcome) -> ExitCode {
    for path in &outcome.written {
        info!("wrote {}", path.display());
    }
    if outcome.is_partial() {
        warn!("{} image(s) skipped", outcome.skipped.len());
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    Ok(match cli.command {
        Command::Morph(a) => report(&cmd_morph(&a.resolve(SplitChoice::All)?)?),
        Command::Eval(a) => report(&cmd_eval(&a.resolve(SplitChoice::Only(Split::Test))?)?),
        // classify uses every split; the flag is accepted for symmetry
        Command::Classify(a) => report(&cmd_classify(&a.resolve(SplitChoice::All)?)?),
        Command::Synth(a) => {
            if a.demo {
                let manifest = cmd_synth_demo(&a.out, a.per_category)?;
                info!("wrote {}", manifest.display());
            } else {
                cmd_synth(&a.spec()?, &a.out)?;
            }
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
