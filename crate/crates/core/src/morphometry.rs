//! Bone shape descriptors: circularity from the outer contour, eccentricity
//! from the moment-equivalent ellipse, and per-group summary statistics.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{extract_contours, largest_contour, polygon_area, polygon_perimeter};
use crate::mask::{Bone, LabelMask};
use crate::pain::PainCategory;

/// Relative threshold below which the minor covariance eigenvalue is
/// treated as zero (collinear pixel set).
const COLLINEAR_TOLERANCE: f64 = 1e-9;

/// `4π·area / perimeter²`.
pub fn circularity(area: f64, perimeter: f64) -> Result<f64> {
    if !(area > 0.0 && perimeter > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "circularity needs positive area and perimeter, got {area} and {perimeter}"
        )));
    }
    Ok(4.0 * PI * area / (perimeter * perimeter))
}

/// `sqrt(1 - (b/a)²)` for semi-axes `a >= b > 0`.
pub fn eccentricity(semi_major: f64, semi_minor: f64) -> Result<f64> {
    if !(semi_minor > 0.0 && semi_major > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "semi-axes must be positive, got a={semi_major}, b={semi_minor}"
        )));
    }
    if semi_minor > semi_major {
        return Err(Error::InvalidArgument(format!(
            "semi-minor axis {semi_minor} exceeds semi-major axis {semi_major}"
        )));
    }
    let ratio = semi_minor / semi_major;
    Ok((1.0 - ratio * ratio).sqrt())
}

/// Ellipse with the same normalized second central moments as a pixel set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseFit {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub centroid: (f64, f64),
    /// Angle of the major axis from +x toward +y, radians.
    pub orientation: f64,
}

/// Moment ellipse over every pixel of `bone` in the mask.
pub fn fit_ellipse_moments(mask: &LabelMask, bone: Bone) -> Result<EllipseFit> {
    let label = bone.label();
    let w = mask.width() as usize;
    let pixels: Vec<(u32, u32)> = mask
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == label)
        .map(|(i, _)| ((i % w) as u32, (i / w) as u32))
        .collect();
    fit_ellipse_pixels(&pixels)
}

/// Moment ellipse of an arbitrary pixel-center set. Semi-axes are
/// `2·sqrt(λ)` of the covariance eigenvalues, so a disk of radius `r`
/// yields `a ≈ b ≈ r`.
pub fn fit_ellipse_pixels(pixels: &[(u32, u32)]) -> Result<EllipseFit> {
    if pixels.len() < 2 {
        return Err(Error::DegenerateShape(format!(
            "need at least 2 pixels for a moment ellipse, got {}",
            pixels.len()
        )));
    }
    let n = pixels.len() as f64;
    let (sx, sy) = pixels
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64, ay + y as f64));
    let (cx, cy) = (sx / n, sy / n);
    let (mut m20, mut m02, mut m11) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        m20 += dx * dx;
        m02 += dy * dy;
        m11 += dx * dy;
    }
    let (m20, m02, m11) = (m20 / n, m02 / n, m11 / n);

    let half_trace = (m20 + m02) / 2.0;
    let root = (((m20 - m02) / 2.0).powi(2) + m11 * m11).sqrt();
    let major = half_trace + root;
    let minor = (half_trace - root).max(0.0);
    if minor <= COLLINEAR_TOLERANCE * major {
        return Err(Error::DegenerateShape(
            "pixel set is collinear (zero minor moment)".into(),
        ));
    }
    Ok(EllipseFit {
        semi_major: 2.0 * major.sqrt(),
        semi_minor: 2.0 * minor.sqrt(),
        centroid: (cx, cy),
        orientation: 0.5 * (2.0 * m11).atan2(m20 - m02),
    })
}

/// 8-connected component of `label` containing `seed`.
pub fn component_pixels(mask: &LabelMask, label: u8, seed: (u32, u32)) -> Vec<(u32, u32)> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    if mask.get(seed.0, seed.1) != label {
        return Vec::new();
    }
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::from([seed]);
    seen[(seed.1 as i64 * w + seed.0 as i64) as usize] = true;
    let mut out = Vec::new();
    while let Some((x, y)) = queue.pop_front() {
        out.push((x, y));
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let idx = (ny * w + nx) as usize;
                if !seen[idx] && mask.labels()[idx] == label {
                    seen[idx] = true;
                    queue.push_back((nx as u32, ny as u32));
                }
            }
        }
    }
    out.sort_unstable_by_key(|&(x, y)| (y, x));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeFeatures {
    pub bone: Bone,
    pub area: f64,
    pub perimeter: f64,
    pub circularity: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub eccentricity: f64,
    pub centroid: (f64, f64),
}

/// Shape of the largest blob of `bone`: area and perimeter from its outer
/// contour, semi-axes from the moments of that blob's pixels. Holes and
/// satellite blobs are ignored.
pub fn compute_shape_features(mask: &LabelMask, bone: Bone) -> Result<ShapeFeatures> {
    if mask.count(bone.label()) == 0 {
        return Err(Error::ClassAbsent(bone.label()));
    }
    let outers: Vec<_> = extract_contours(mask, bone)
        .into_iter()
        .filter(|c| !c.is_hole())
        .collect();
    let outer = largest_contour(&outers)?;
    let area = polygon_area(outer);
    let perimeter = polygon_perimeter(outer);
    let seed = outer
        .seed_pixel()
        .expect("contours extracted from a mask carry a seed pixel");
    let blob = component_pixels(mask, bone.label(), seed);
    let fit = fit_ellipse_pixels(&blob)?;
    Ok(ShapeFeatures {
        bone,
        area,
        perimeter,
        circularity: circularity(area, perimeter)?,
        semi_major: fit.semi_major,
        semi_minor: fit.semi_minor,
        eccentricity: eccentricity(fit.semi_major, fit.semi_minor)?,
        centroid: fit.centroid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeMetric {
    Circularity,
    Eccentricity,
}

impl ShapeMetric {
    pub const ALL: [ShapeMetric; 2] = [ShapeMetric::Circularity, ShapeMetric::Eccentricity];

    pub fn name(self) -> &'static str {
        match self {
            ShapeMetric::Circularity => "circularity",
            ShapeMetric::Eccentricity => "eccentricity",
        }
    }

    pub fn of(self, f: &ShapeFeatures) -> f64 {
        match self {
            ShapeMetric::Circularity => f.circularity,
            ShapeMetric::Eccentricity => f.eccentricity,
        }
    }
}

impl fmt::Display for ShapeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub category: PainCategory,
    pub bone: Bone,
    pub metric: ShapeMetric,
    pub mean: f64,
    /// Sample standard deviation; 0 for singleton groups.
    pub std: f64,
    pub n: usize,
}

/// Mean and sample standard deviation per (bone, category, metric), in
/// bone, category, metric order. Independent of input order.
pub fn group_stats(records: &[(ShapeFeatures, PainCategory)]) -> Result<Vec<GroupStats>> {
    if records.is_empty() {
        return Err(Error::Empty("group_stats needs at least one record"));
    }
    let mut groups: BTreeMap<(Bone, PainCategory, ShapeMetric), Vec<f64>> = BTreeMap::new();
    for (f, cat) in records {
        for metric in ShapeMetric::ALL {
            groups
                .entry((f.bone, *cat, metric))
                .or_default()
                .push(metric.of(f));
        }
    }
    Ok(groups
        .into_iter()
        .map(|((bone, category, metric), mut values)| {
            values.sort_by(f64::total_cmp);
            let (mean, std) = mean_and_sample_std(&values);
            GroupStats {
                category,
                bone,
                metric,
                mean,
                std,
                n: values.len(),
            }
        })
        .collect())
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
