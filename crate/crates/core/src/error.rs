use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. Display strings start with the
/// variant name so command-line diagnostics stay greppable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("BadMagic: expected \"VCT1\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("VersionUnsupported: version {version} (only 1 is supported)")]
    VersionUnsupported { version: u32 },
    #[error("TruncatedPayload: {field} needs {expected} bytes, {actual} available")]
    TruncatedPayload {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("TrailingBytes: payload is {expected} bytes but {actual} follow the header")]
    TrailingBytes { expected: usize, actual: usize },
    #[error("DimZero: {field} must be at least 1")]
    DimZero { field: &'static str },
    #[error("DtypeUnsupported: dtype code {code} (expected 1 = f32 or 2 = u8)")]
    DtypeUnsupported { code: u32 },
    #[error("ValueOutOfRange: element {index} = {value} lies outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f32 },
    #[error("LengthMismatch: {field} has {actual} elements, shape implies {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("NonFinite: {field} contains a non-finite value")]
    NonFinite { field: &'static str },

    #[error("EmptyLabel: a label needs at least 2 classes, got {len}")]
    EmptyLabel { len: usize },
    #[error("NegativeMass: class {index} has mass {value}")]
    NegativeMass { index: usize, value: f64 },
    #[error("MassNotUnit: label masses sum to {sum}")]
    MassNotUnit { sum: f64 },
    #[error("EmptyBatch: a batch needs at least one item")]
    EmptyBatch,

    #[error("NonPositiveAlpha: alpha = {alpha}")]
    NonPositiveAlpha { alpha: f64 },
    #[error("RatioOutOfRange: {field} = {value} is outside [0, 1]")]
    RatioOutOfRange { field: &'static str, value: f64 },
    #[error("CoordsOutOfRange: {axis} interval [{lo}, {hi}) does not fit extent {extent}")]
    CoordsOutOfRange {
        axis: &'static str,
        lo: usize,
        hi: usize,
        extent: usize,
    },

    #[error("ShapeMismatch: {field} is {left}, expected {right}")]
    ShapeMismatch {
        field: &'static str,
        left: String,
        right: String,
    },
    #[error("LabelDimMismatch: label has {left} classes, expected {right}")]
    LabelDimMismatch { left: usize, right: usize },
    #[error("BatchTooSmall: mixing needs at least 2 items, got {len}")]
    BatchTooSmall { len: usize },
    #[error("UnsupportedVideoCount: n_videos = {n} (expected 2, 3 or 4)")]
    UnsupportedVideoCount { n: usize },
    #[error("MaskTooLarge: mask side {side} exceeds frame {height}x{width}")]
    MaskTooLarge {
        side: usize,
        height: usize,
        width: usize,
    },

    #[error("SpecInfeasible: (frames - 1) * stride = {span} must be below window {window}")]
    SpecInfeasible { span: usize, window: usize },
    #[error("TooFewFrames: video has {available} frames, {requested} requested")]
    TooFewFrames { available: usize, requested: usize },
    #[error("CropTooLarge: crop {crop} exceeds frame {height}x{width}")]
    CropTooLarge {
        crop: usize,
        height: usize,
        width: usize,
    },
    #[error("DegenerateScaleRange: ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1")]
    DegenerateScaleRange { lo: f64, hi: f64 },

    #[error("TooManyBins: {bins} bins for {segments} segments")]
    TooManyBins { bins: usize, segments: usize },

    #[error("DimMismatch: {field} is {actual}, expected {expected}")]
    DimMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("EmptyInterval: [{start}, {end})")]
    EmptyInterval { start: usize, end: usize },

    #[error("Diverged: non-finite loss in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("InvalidConfig: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },
}
