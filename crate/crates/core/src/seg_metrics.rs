//! Per-class segmentation scoring: confusion counts, the five overlap
//! percentages, pixel-wise sparse categorical cross-entropy, and
//! aggregation across images.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::{Bone, LabelMask, ProbabilityMap};

/// Lower clamp applied to probabilities before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// One-vs-rest pixel counts for a single bone class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub bone: Bone,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(bone: Bone, tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self {
            bone,
            tp,
            tn,
            fp,
            fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Counts with prediction and ground truth exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            fp: self.fn_,
            fn_: self.fp,
            ..*self
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        Self {
            bone: self.bone,
            tp: self.tp + rhs.tp,
            tn: self.tn + rhs.tn,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

pub fn confusion_counts(pred: &LabelMask, gt: &LabelMask, bone: Bone) -> Result<ConfusionCounts> {
    pred.same_dims(gt)?;
    let label = bone.label();
    let mut c = ConfusionCounts::new(bone, 0, 0, 0, 0);
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        match (p == label, g == label) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metrics whose denominator was zero. They are reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DegenerateFlags {
    pub precision: bool,
    pub recall: bool,
    pub dice: bool,
    pub iou: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.dice || self.iou
    }

    fn union(self, other: Self) -> Self {
        Self {
            precision: self.precision || other.precision,
            recall: self.recall || other.recall,
            dice: self.dice || other.dice,
            iou: self.iou || other.iou,
        }
    }
}

impl fmt::Display for DegenerateFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.precision, "precision"),
            (self.recall, "recall"),
            (self.dice, "dice"),
            (self.iou, "iou"),
        ]
        .iter()
        .filter(|(set, _)| *set)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join("|"))
    }
}

/// Percentages in `[0, 100]` plus the counts they were derived from (summed
/// counts for aggregates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegMetrics {
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub dice: f64,
    pub iou: f64,
    pub degenerate: DegenerateFlags,
    pub counts: ConfusionCounts,
}

fn percent(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (100.0 * num as f64 / den as f64, false)
    }
}

pub fn metrics_from_counts(c: &ConfusionCounts) -> Result<SegMetrics> {
    if c.total() == 0 {
        return Err(Error::Empty("confusion counts are all zero"));
    }
    let (acc, _) = percent(c.tp + c.tn, c.total());
    let (precision, dp) = percent(c.tp, c.tp + c.fp);
    let (recall, dr) = percent(c.tp, c.tp + c.fn_);
    let (dice, dd) = percent(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    let (iou, di) = percent(c.tp, c.tp + c.fp + c.fn_);
    Ok(SegMetrics {
        acc,
        precision,
        recall,
        dice,
        iou,
        degenerate: DegenerateFlags {
            precision: dp,
            recall: dr,
            dice: dd,
            iou: di,
        },
        counts: *c,
    })
}

pub fn score_masks(pred: &LabelMask, gt: &LabelMask, bone: Bone) -> Result<SegMetrics> {
    metrics_from_counts(&confusion_counts(pred, gt, bone)?)
}

/// Mean over pixels of `-ln P(i, y_i)`, probabilities clamped at [`PROB_FLOOR`].
pub fn sparse_ce_loss(p: &ProbabilityMap, gt: &LabelMask) -> Result<f64> {
    if p.width() != gt.width() || p.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            left_w: p.width(),
            left_h: p.height(),
            right_w: gt.width(),
            right_h: gt.height(),
        });
    }
    let mut total = 0.0;
    for (i, &label) in gt.labels().iter().enumerate() {
        if label as u32 >= p.classes() {
            return Err(Error::LabelOutOfRange {
                label,
                index: i,
                classes: p.classes(),
            });
        }
        let prob = p.pixel(i)[label as usize].max(PROB_FLOOR);
        total -= prob.ln();
    }
    // -ln(1) may leave -0.0 behind.
    Ok((total / p.pixel_count() as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum AggregationMode {
    /// Unweighted mean of per-image percentages.
    #[default]
    Macro,
    /// Metrics recomputed from counts summed over images.
    Micro,
}

impl AggregationMode {
    pub fn name(self) -> &'static str {
        match self {
            AggregationMode::Macro => "macro",
            AggregationMode::Micro => "micro",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "macro" => Some(Self::Macro),
            "micro" | "micro-counts" => Some(Self::Micro),
            _ => None,
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Aggregates per-image metrics of one bone. Result does not depend on the
/// order of `per_image`.
pub fn aggregate_metrics(per_image: &[SegMetrics], mode: AggregationMode) -> Result<SegMetrics> {
    let first = per_image
        .first()
        .ok_or(Error::Empty("aggregate_metrics needs at least one image"))?;
    let bone = first.counts.bone;
    if let Some(m) = per_image.iter().find(|m| m.counts.bone != bone) {
        return Err(Error::InvalidArgument(format!(
            "cannot aggregate {} metrics with {} metrics",
            m.counts.bone, bone
        )));
    }
    let pooled = per_image
        .iter()
        .map(|m| m.counts)
        .fold(ConfusionCounts::new(bone, 0, 0, 0, 0), |a, b| a + b);
    match mode {
        AggregationMode::Micro => metrics_from_counts(&pooled),
        AggregationMode::Macro => {
            let mean = |get: fn(&SegMetrics) -> f64| {
                let mut v: Vec<f64> = per_image.iter().map(get).collect();
                v.sort_by(f64::total_cmp);
                v.iter().sum::<f64>() / v.len() as f64
            };
            Ok(SegMetrics {
                acc: mean(|m| m.acc),
                precision: mean(|m| m.precision),
                recall: mean(|m| m.recall),
                dice: mean(|m| m.dice),
                iou: mean(|m| m.iou),
                degenerate: per_image
                    .iter()
                    .fold(DegenerateFlags::default(), |a, m| a.union(m.degenerate)),
                counts: pooled,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts::new(Bone::Femur, tp, tn, fp, fn_)
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let mut labels = vec![0u8; 25];
        labels[..10].fill(1);
        let gt = LabelMask::new(5, 5, labels).unwrap();
        assert_eq!(
            confusion_counts(&gt, &gt, Bone::Femur).unwrap(),
            counts(10, 15, 0, 0)
        );
        let empty = LabelMask::empty(5, 5).unwrap();
        assert_eq!(
            confusion_counts(&empty, &gt, Bone::Femur).unwrap(),
            counts(0, 15, 0, 10)
        );
    }

    #[test]
    fn three_pixel_enumeration() {
        let gt = LabelMask::new(3, 1, vec![1, 1, 0]).unwrap();
        let pred = LabelMask::new(3, 1, vec![1, 0, 1]).unwrap();
        assert_eq!(
            confusion_counts(&pred, &gt, Bone::Femur).unwrap(),
            counts(1, 0, 1, 1)
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = LabelMask::empty(2, 2).unwrap();
        let b = LabelMask::empty(2, 3).unwrap();
        assert!(matches!(
            confusion_counts(&a, &b, Bone::Tibia),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metric_formulas() {
        let m = metrics_from_counts(&counts(5, 5, 0, 0)).unwrap();
        for v in [m.acc, m.precision, m.recall, m.dice, m.iou] {
            assert_eq!(v, 100.0);
        }
        assert!(!m.degenerate.any());

        let m = metrics_from_counts(&counts(1, 0, 1, 1)).unwrap();
        assert!((m.acc - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.precision, 50.0);
        assert_eq!(m.recall, 50.0);
        assert_eq!(m.dice, 50.0);
        assert!((m.iou - 100.0 / 3.0).abs() < 1e-12);

        let m = metrics_from_counts(&counts(0, 90, 0, 10)).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.acc, 90.0);
        assert!(m.degenerate.precision);
        assert!(!m.degenerate.recall);
        assert_eq!(m.degenerate.to_string(), "precision");

        assert!(metrics_from_counts(&counts(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let gt = LabelMask::new(2, 1, vec![0, 2]).unwrap();
        let onehot = ProbabilityMap::new(2, 1, 3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sparse_ce_loss(&onehot, &gt).unwrap(), 0.0);

        let uniform = ProbabilityMap::new(2, 1, 3, vec![1.0 / 3.0; 6]).unwrap();
        assert!((sparse_ce_loss(&uniform, &gt).unwrap() - 3f64.ln()).abs() < 1e-12);

        let gt2 = LabelMask::new(2, 1, vec![0, 1]).unwrap();
        let p = ProbabilityMap::new(2, 1, 2, vec![0.5, 0.5, 0.75, 0.25]).unwrap();
        let expected = -(0.5f64.ln() + 0.25f64.ln()) / 2.0;
        assert!((sparse_ce_loss(&p, &gt2).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.0397).abs() < 1e-4);

        let two_class = ProbabilityMap::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            sparse_ce_loss(&two_class, &gt),
            Err(Error::LabelOutOfRange { label: 2, index: 1, .. })
        ));
        let small = ProbabilityMap::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(sparse_ce_loss(&small, &gt).is_err());
    }

    #[test]
    fn zero_probability_is_clamped() {
        let gt = LabelMask::new(1, 1, vec![1]).unwrap();
        let p = ProbabilityMap::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        assert!((sparse_ce_loss(&p, &gt).unwrap() - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn aggregation_modes() {
        let one = metrics_from_counts(&counts(3, 4, 1, 2)).unwrap();
        for mode in [AggregationMode::Macro, AggregationMode::Micro] {
            let agg = aggregate_metrics(&[one], mode).unwrap();
            assert!((agg.dice - one.dice).abs() < 1e-12);
            assert!((agg.acc - one.acc).abs() < 1e-12);
        }

        let perfect = metrics_from_counts(&counts(10, 0, 0, 0)).unwrap();
        let missed = metrics_from_counts(&counts(0, 0, 0, 10)).unwrap();
        let macro_ = aggregate_metrics(&[perfect, missed], AggregationMode::Macro).unwrap();
        assert_eq!(macro_.dice, 50.0);
        let micro = aggregate_metrics(&[perfect, missed], AggregationMode::Micro).unwrap();
        assert!((micro.dice - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(micro.counts, counts(10, 0, 0, 10));

        assert!(aggregate_metrics(&[], AggregationMode::Macro).is_err());
        let mut tibia = one;
        tibia.counts.bone = Bone::Tibia;
        assert!(aggregate_metrics(&[one, tibia], AggregationMode::Macro).is_err());
    }

    #[test]
    fn macro_is_order_independent() {
        let ms: Vec<SegMetrics> = (1..8u64)
            .map(|i| metrics_from_counts(&counts(i * 7, 100 - i, i * i, 11 - i)).unwrap())
            .collect();
        let fwd = aggregate_metrics(&ms, AggregationMode::Macro).unwrap();
        let mut rev = ms.clone();
        rev.reverse();
        assert_eq!(fwd, aggregate_metrics(&rev, AggregationMode::Macro).unwrap());
    }

    proptest! {
        #[test]
        fn dice_iou_identity(tp in 0u64..10_000, tn in 0u64..10_000, fp in 0u64..10_000, fn_ in 0u64..10_000) {
            prop_assume!(tp + fp + fn_ > 0);
            let m = metrics_from_counts(&counts(tp, tn, fp, fn_)).unwrap();
            prop_assert!((m.dice - 200.0 * m.iou / (100.0 + m.iou)).abs() < 1e-9);
            prop_assert_eq!(m.recall == 100.0, fn_ == 0 && tp > 0);
        }

        #[test]
        fn swap_symmetry(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 1u64..500) {
            let c = counts(tp, tn, fp, fn_);
            let a = metrics_from_counts(&c).unwrap();
            let b = metrics_from_counts(&c.swapped()).unwrap();
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert_eq!(a.dice, b.dice);
            prop_assert_eq!(a.iou, b.iou);
            prop_assert_eq!(a.acc, b.acc);
        }
    }
}
