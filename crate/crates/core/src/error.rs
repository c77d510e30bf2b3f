use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("invalid label value {value} at (x={x}, y={y}); expected 0, 1 or 2")]
    InvalidLabel { value: u8, x: u32, y: u32 },

    #[error("invalid bone class id {0}; expected 1 (femur) or 2 (tibia)")]
    InvalidClass(u8),

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("buffer length {actual} does not match {width}x{height}")]
    BufferLength { width: u32, height: u32, actual: usize },

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("invalid probability map: {0}")]
    InvalidProbabilityMap(String),

    #[error("ground-truth label {label} at pixel {index} is out of range for {classes} classes")]
    LabelOutOfRange { label: u8, index: usize, classes: u32 },

    #[error("manifest line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("manifest line {line}: unknown split {token:?}; expected train, val or test")]
    UnknownSplit { line: u64, token: String },

    #[error("manifest line {line}: duplicate image_id {id:?}")]
    DuplicateId { line: u64, id: String },

    #[error("class {0} is absent from the mask")]
    ClassAbsent(u8),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate training labels: all {n} training samples share one class")]
    DegenerateLabels { n: usize },

    #[error("shape does not fit on the canvas: {0}")]
    ShapeOutOfCanvas(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
