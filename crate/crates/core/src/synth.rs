//! Synthetic label masks: analytic shapes rasterized by pixel-center
//! inclusion. Used by tests, the acceptance suite and the `synth` command.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::manifest::{write_manifest, DatasetManifest, ManifestEntry, Split};
use crate::mask::{write_mask, write_prob_map, Bone, LabelMask, ProbabilityMap};
use crate::pain::{PainCategory, PainRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { radius: f64 },
    /// Semi-axes along the rotated x and y directions; `angle_deg` rotates
    /// the first axis from +x toward +y.
    Ellipse { semi_x: f64, semi_y: f64, angle_deg: f64 },
    /// Axis-aligned; covers pixel centers in `[c - w/2, c + w/2)`.
    Rect { width: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub shape: Shape,
    pub center: (f64, f64),
    pub label: Bone,
    pub canvas: (u32, u32),
}

impl SyntheticSpec {
    pub fn new(shape: Shape, center: (f64, f64), label: Bone, canvas: (u32, u32)) -> Self {
        Self {
            shape,
            center,
            label,
            canvas,
        }
    }

    fn half_extents(&self) -> (f64, f64) {
        match self.shape {
            Shape::Disk { radius } => (radius, radius),
            Shape::Ellipse {
                semi_x,
                semi_y,
                angle_deg,
            } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                (
                    (semi_x * semi_x * c * c + semi_y * semi_y * s * s).sqrt(),
                    (semi_x * semi_x * s * s + semi_y * semi_y * c * c).sqrt(),
                )
            }
            Shape::Rect { width, height } => (width / 2.0, height / 2.0),
        }
    }

    /// Checks parameters and that the shape lies within the pixel-center
    /// range of the canvas.
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.canvas;
        if w == 0 || h == 0 {
            return Err(Error::InvalidDimensions {
                width: w,
                height: h,
            });
        }
        let params_ok = match self.shape {
            Shape::Disk { radius } => radius > 0.0,
            Shape::Ellipse { semi_x, semi_y, angle_deg } => {
                semi_x > 0.0 && semi_y > 0.0 && angle_deg.is_finite()
            }
            Shape::Rect { width, height } => width > 0.0 && height > 0.0,
        };
        if !params_ok {
            return Err(Error::InvalidArgument(format!(
                "shape parameters must be positive: {:?}",
                self.shape
            )));
        }
        let (ex, ey) = self.half_extents();
        let (cx, cy) = self.center;
        let fits = cx - ex >= 0.0
            && cx + ex <= (w - 1) as f64
            && cy - ey >= 0.0
            && cy + ey <= (h - 1) as f64;
        if !fits {
            return Err(Error::ShapeOutOfCanvas(format!(
                "{:?} centred at ({cx}, {cy}) on a {w}x{h} canvas",
                self.shape
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        match self.shape {
            Shape::Disk { radius } => dx * dx + dy * dy <= radius * radius,
            Shape::Ellipse {
                semi_x,
                semi_y,
                angle_deg,
            } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                (u / semi_x).powi(2) + (v / semi_y).powi(2) <= 1.0
            }
            Shape::Rect { width, height } => {
                let (hx, hy) = (width / 2.0, height / 2.0);
                (-hx..hx).contains(&dx) && (-hy..hy).contains(&dy)
            }
        }
    }

    /// Paints the shape over `mask`, overwriting whatever was there.
    pub fn paint(&self, mask: &mut LabelMask) -> Result<()> {
        self.validate()?;
        if (mask.width(), mask.height()) != self.canvas {
            return Err(Error::DimensionMismatch {
                left_w: mask.width(),
                left_h: mask.height(),
                right_w: self.canvas.0,
                right_h: self.canvas.1,
            });
        }
        let (ex, ey) = self.half_extents();
        let (cx, cy) = self.center;
        let x0 = (cx - ex).floor().max(0.0) as u32;
        let x1 = ((cx + ex).ceil() as u32).min(self.canvas.0 - 1);
        let y0 = (cy - ey).floor().max(0.0) as u32;
        let y1 = ((cy + ey).ceil() as u32).min(self.canvas.1 - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.contains(x as f64, y as f64) {
                    mask.set(x, y, self.label.label())?;
                }
            }
        }
        Ok(())
    }

    pub fn render(&self) -> Result<LabelMask> {
        let mut mask = LabelMask::empty(self.canvas.0, self.canvas.1)?;
        self.paint(&mut mask)?;
        Ok(mask)
    }
}

pub const DEMO_CANVAS: (u32, u32) = (640, 640);

/// Femur semi-minor axis per pain group; worsened knees get rounder femurs.
fn demo_femur_minor(category: PainCategory) -> f64 {
    match category {
        PainCategory::Worsened => 125.0,
        PainCategory::NoChange => 95.0,
        PainCategory::Improved => 70.0,
    }
}

/// Knee-like two-bone mask for image `index` within a pain group.
pub fn demo_mask(category: PainCategory, index: usize) -> Result<LabelMask> {
    let j = index as f64;
    let femur = SyntheticSpec::new(
        Shape::Ellipse {
            semi_x: 150.0 + 3.0 * j,
            semi_y: demo_femur_minor(category) + 2.0 * j,
            angle_deg: 4.0 * j,
        },
        (320.0, 165.0),
        Bone::Femur,
        DEMO_CANVAS,
    );
    let tibia = SyntheticSpec::new(
        Shape::Ellipse {
            semi_x: 140.0 + 2.0 * j,
            semi_y: 80.0 + j,
            angle_deg: -3.0 * j,
        },
        (320.0, 470.0),
        Bone::Tibia,
        DEMO_CANVAS,
    );
    let mut mask = LabelMask::empty(DEMO_CANVAS.0, DEMO_CANVAS.1)?;
    femur.paint(&mut mask)?;
    tibia.paint(&mut mask)?;
    Ok(mask)
}

fn demo_scores(category: PainCategory, index: usize) -> (i64, i64) {
    let j = (index % 2) as i64;
    match category {
        PainCategory::Worsened => (3, 5 + j),
        PainCategory::Improved => (6, 4 - j),
        PainCategory::NoChange => (4, 4 + j),
    }
}

/// One-hot probability map agreeing with `mask`.
pub fn one_hot_prob_map(mask: &LabelMask, classes: u32) -> Result<ProbabilityMap> {
    let c = classes as usize;
    let mut probs = vec![0f64; mask.len() * c];
    for (i, &label) in mask.labels().iter().enumerate() {
        if label as u32 >= classes {
            return Err(Error::LabelOutOfRange {
                label,
                index: i,
                classes,
            });
        }
        probs[i * c + label as usize] = 1.0;
    }
    ProbabilityMap::new(mask.width(), mask.height(), classes, probs)
}

/// Writes a demo dataset under `dir`: `per_category` images for each pain
/// group, ground-truth and identical predicted masks, one-hot probability
/// maps, and `manifest.csv`. Within each group images cycle through
/// train, train, val, test.
pub fn write_demo_dataset(dir: impl AsRef<Path>, per_category: usize) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let io = |path: &Path, source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    for sub in ["gt", "pred", "prob"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| io(&p, e))?;
    }
    let mut entries = Vec::new();
    for category in PainCategory::ALL {
        for index in 0..per_category {
            let id = format!("{}_{index:02}", category.name());
            let mask = demo_mask(category, index)?;
            let gt = dir.join("gt").join(format!("{id}.png"));
            let pred = dir.join("pred").join(format!("{id}.png"));
            let prob = dir.join("prob").join(format!("{id}.bin"));
            write_mask(&mask, &gt)?;
            write_mask(&mask, &pred)?;
            write_prob_map(&one_hot_prob_map(&mask, 3)?, &prob)?;
            let split = match index % 4 {
                0 | 1 => Split::Train,
                2 => Split::Val,
                _ => Split::Test,
            };
            let (b, f) = demo_scores(category, index);
            entries.push(ManifestEntry {
                pain: Some(PainRecord::new(id.clone(), b, f)),
                image_id: id,
                gt_mask: gt,
                pred_mask: Some(pred),
                prob_map: Some(prob),
                split,
            });
        }
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&DatasetManifest { entries }, &manifest)?;
    Ok(manifest)
}
