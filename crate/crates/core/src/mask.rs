//! Label masks, probability maps and their on-disk formats.
//!
//! Masks are 8-bit single-channel PNG or PGM images whose pixel value is the
//! class label: 0 background, 1 femur, 2 tibia. Probability maps use a flat
//! little-endian binary layout: three `u32` header words (width, height,
//! classes) followed by `width * height * classes` `f32` values, row-major
//! with the class index innermost.

use std::fmt;
use std::fs;
use std::path::Path;

use image::{ColorType, GrayImage, ImageReader};

use crate::error::{Error, Result};

pub const BACKGROUND: u8 = 0;
pub const MAX_LABEL: u8 = 2;

/// Bone classes scored and measured by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bone {
    Femur = 1,
    Tibia = 2,
}

impl Bone {
    pub const ALL: [Bone; 2] = [Bone::Femur, Bone::Tibia];

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Bone::Femur => "femur",
            Bone::Tibia => "tibia",
        }
    }

    pub fn from_name(name: &str) -> Option<Bone> {
        match name.trim().to_ascii_lowercase().as_str() {
            "femur" => Some(Bone::Femur),
            "tibia" => Some(Bone::Tibia),
            _ => None,
        }
    }
}

impl TryFrom<u8> for Bone {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Bone::Femur),
            2 => Ok(Bone::Tibia),
            other => Err(Error::InvalidClass(other)),
        }
    }
}

impl serde::Serialize for Bone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Display for Bone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Row-major grid of class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: u32,
    height: u32,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: u32, height: u32, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if labels.len() != width as usize * height as usize {
            return Err(Error::BufferLength {
                width,
                height,
                actual: labels.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&v| v > MAX_LABEL) {
            return Err(Error::InvalidLabel {
                value: labels[i],
                x: (i % width as usize) as u32,
                y: (i / width as usize) as u32,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![BACKGROUND; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Sets one pixel. Values above [`MAX_LABEL`] are rejected.
    pub fn set(&mut self, x: u32, y: u32, label: u8) -> Result<()> {
        if label > MAX_LABEL {
            return Err(Error::InvalidLabel { value: label, x, y });
        }
        let w = self.width as usize;
        self.labels[y as usize * w + x as usize] = label;
        Ok(())
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&v| v == label).count()
    }

    pub fn same_dims(&self, other: &LabelMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }

    /// Sorted set of labels present in the mask.
    pub fn label_set(&self) -> Vec<u8> {
        let mut seen = [false; MAX_LABEL as usize + 1];
        for &v in &self.labels {
            seen[v as usize] = true;
        }
        (0..=MAX_LABEL).filter(|&v| seen[v as usize]).collect()
    }
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let unreadable = |reason: String| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason,
    };
    let img = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?
        .decode()
        .map_err(|e| unreadable(e.to_string()))?;
    if img.color() != ColorType::L8 {
        return Err(unreadable(format!(
            "expected 8-bit single-channel grayscale, found {:?}",
            img.color()
        )));
    }
    let gray = img.into_luma8();
    let (width, height) = gray.dimensions();
    LabelMask::new(width, height, gray.into_raw())
}

/// Writes the mask as an 8-bit grayscale image; format follows the extension
/// (`.png`, `.pgm`).
pub fn write_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(mask.width, mask.height, mask.labels.clone())
        .expect("mask buffer length checked at construction");
    img.save(path).map_err(|e| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Nearest-neighbour resampling; samples the source pixel whose center is
/// closest to each target pixel center.
pub fn resize_nearest(mask: &LabelMask, target_w: u32, target_h: u32) -> Result<LabelMask> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidDimensions {
            width: target_w,
            height: target_h,
        });
    }
    if target_w == mask.width && target_h == mask.height {
        return Ok(mask.clone());
    }
    let src_index = |t: u32, src: u32, dst: u32| -> usize {
        let s = ((t as f64 + 0.5) * src as f64 / dst as f64).floor() as u32;
        s.min(src - 1) as usize
    };
    let xs: Vec<usize> = (0..target_w)
        .map(|x| src_index(x, mask.width, target_w))
        .collect();
    let sw = mask.width as usize;
    let mut labels = Vec::with_capacity(target_w as usize * target_h as usize);
    for y in 0..target_h {
        let row = src_index(y, mask.height, target_h) * sw;
        labels.extend(xs.iter().map(|&sx| mask.labels[row + sx]));
    }
    LabelMask::new(target_w, target_h, labels)
}

/// Per-pixel class probability vectors. Held as `f64`; the file format
/// stores `f32`, so [`ProbabilityMap::to_bytes`] rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: u32,
    height: u32,
    classes: u32,
    probs: Vec<f64>,
}

pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

impl ProbabilityMap {
    pub fn new(width: u32, height: u32, classes: u32, probs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if classes < 2 {
            return Err(Error::InvalidProbabilityMap(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        let expected = width as usize * height as usize * classes as usize;
        if probs.len() != expected {
            return Err(Error::InvalidProbabilityMap(format!(
                "payload has {} values, expected {expected}",
                probs.len()
            )));
        }
        for (i, px) in probs.chunks_exact(classes as usize).enumerate() {
            if let Some(p) = px.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::InvalidProbabilityMap(format!(
                    "pixel {i} has invalid probability {p}"
                )));
            }
            let sum: f64 = px.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(Error::InvalidProbabilityMap(format!(
                    "pixel {i} probabilities sum to {sum}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            classes,
            probs,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        let c = self.classes as usize;
        &self.probs[index * c..(index + 1) * c]
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.probs.len() * 4);
        for word in [self.width, self.height, self.classes] {
            out.extend_from_slice(&word.to_le_bytes());
        }
        for &p in &self.probs {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::InvalidProbabilityMap(format!(
                "{} bytes is shorter than the 12-byte header",
                bytes.len()
            )));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap());
        let (width, height, classes) = (word(0), word(1), word(2));
        let payload = &bytes[12..];
        let expected = (width as u64) * (height as u64) * (classes as u64) * 4;
        if payload.len() as u64 != expected {
            return Err(Error::InvalidProbabilityMap(format!(
                "payload is {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let probs = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Self::new(width, height, classes, probs)
    }
}

pub fn load_prob_map(path: impl AsRef<Path>) -> Result<ProbabilityMap> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ProbabilityMap::from_bytes(&bytes)
}

pub fn write_prob_map(map: &ProbabilityMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, map.to_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(size: u32, cx: f64, cy: f64, r: f64) -> LabelMask {
        let mut labels = vec![0u8; (size * size) as usize];
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    labels[(y * size + x) as usize] = 1;
                }
            }
        }
        LabelMask::new(size, size, labels).unwrap()
    }

    #[test]
    fn png_identity_decoding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = LabelMask::new(2, 2, vec![0, 1, 2, 0]).unwrap();
        write_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
    }

    #[test]
    fn pgm_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = LabelMask::new(3, 1, vec![2, 1, 0]).unwrap();
        write_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
    }

    #[test]
    fn out_of_range_pixel_is_rejected_with_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        GrayImage::from_raw(3, 2, vec![0, 0, 0, 0, 7, 0])
            .unwrap()
            .save(&path)
            .unwrap();
        match load_mask(&path) {
            Err(Error::InvalidLabel { value: 7, x: 1, y: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_garbage_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_mask(dir.path().join("nope.png")),
            Err(Error::NotFound(_))
        ));
        let junk = dir.path().join("junk.png");
        fs::write(&junk, b"definitely not a png").unwrap();
        assert!(matches!(
            load_mask(&junk),
            Err(Error::UnreadableImage { .. })
        ));
    }

    #[test]
    fn rgb_image_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        image::RgbImage::new(2, 2).save(&path).unwrap();
        assert!(matches!(
            load_mask(&path),
            Err(Error::UnreadableImage { .. })
        ));
    }

    #[test]
    fn all_zero_mask_has_no_bone_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.png");
        write_mask(&LabelMask::empty(640, 640).unwrap(), &path).unwrap();
        let m = load_mask(&path).unwrap();
        assert_eq!(m.count(1), 0);
        assert_eq!(m.count(2), 0);
    }

    #[test]
    fn resize_identity_and_label_set() {
        let m = disk(32, 15.0, 15.0, 9.0);
        assert_eq!(resize_nearest(&m, 32, 32).unwrap(), m);

        let checker: Vec<u8> = (0..16).map(|i| ((i % 4 + i / 4) % 2) as u8).collect();
        let c = LabelMask::new(4, 4, checker).unwrap();
        let r = resize_nearest(&c, 2, 2).unwrap();
        assert_eq!((r.width(), r.height()), (2, 2));
        assert!(r.labels().iter().all(|v| *v <= 1));

        assert!(resize_nearest(&c, 0, 2).is_err());
    }

    #[test]
    fn resize_preserves_disk_fraction() {
        let src = disk(1024, 511.5, 511.5, 300.0);
        let dst = resize_nearest(&src, 640, 640).unwrap();
        let before = src.count(1) as f64 / src.len() as f64;
        let after = dst.count(1) as f64 / dst.len() as f64;
        assert!(((after - before) / before).abs() < 0.02, "{before} vs {after}");
    }

    #[test]
    fn prob_map_round_trip_and_validation() {
        let map = ProbabilityMap::new(2, 1, 2, vec![0.25, 0.75, 1.0, 0.0]).unwrap();
        let back = ProbabilityMap::from_bytes(&map.to_bytes()).unwrap();
        assert_eq!(back, map);
        assert_eq!(back.pixel(1), &[1.0, 0.0]);

        assert!(ProbabilityMap::new(1, 1, 2, vec![0.5, 0.6]).is_err());
        assert!(ProbabilityMap::new(1, 1, 2, vec![-0.5, 1.5]).is_err());
        assert!(ProbabilityMap::new(1, 1, 1, vec![1.0]).is_err());
        assert!(ProbabilityMap::from_bytes(&[0u8; 5]).is_err());
        let mut truncated = map.to_bytes();
        truncated.pop();
        assert!(ProbabilityMap::from_bytes(&truncated).is_err());
    }

    #[test]
    fn bone_ids() {
        assert_eq!(Bone::try_from(1).unwrap(), Bone::Femur);
        assert_eq!(Bone::try_from(2).unwrap(), Bone::Tibia);
        assert!(matches!(Bone::try_from(0), Err(Error::InvalidClass(0))));
        assert!(matches!(Bone::try_from(3), Err(Error::InvalidClass(3))));
        assert_eq!(Bone::from_name(" Tibia"), Some(Bone::Tibia));
    }
}
