//! Knee bone morphometry from label masks.
//!
//! The pipeline starts from femur/tibia label masks (manual or predicted by
//! any segmentation model) and provides:
//!
//! * [`mask`]: mask, probability-map and manifest I/O, nearest-neighbour resizing
//! * [`geometry`]: marching-squares contours, shoelace area, perimeter
//! * [`morphometry`]: circularity, moment-ellipse eccentricity, group statistics
//! * [`seg_metrics`]: accuracy, precision, recall, Dice, IoU, sparse cross-entropy
//! * [`classifier`]: KNN pain-change classification over shape features
//! * [`synth`]: analytic shape rasterization for tests and demos

pub mod classifier;
pub mod error;
pub mod geometry;
pub mod manifest;
pub mod mask;
pub mod morphometry;
pub mod pain;
pub mod seg_metrics;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{extract_contours, largest_contour, polygon_area, polygon_perimeter, Contour, Point};
pub use manifest::{load_manifest, DatasetManifest, ManifestEntry, Split};
pub use mask::{load_mask, resize_nearest, write_mask, Bone, LabelMask, ProbabilityMap};
pub use morphometry::{compute_shape_features, group_stats, GroupStats, ShapeFeatures};
pub use pain::{categorize_pain, PainCategory, PainRecord};
pub use seg_metrics::{
    aggregate_metrics, confusion_counts, metrics_from_counts, sparse_ce_loss, AggregationMode,
    ConfusionCounts, SegMetrics,
};
