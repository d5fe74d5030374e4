use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("dimension mismatch: raster is {width}x{height}, expected {expected}x{expected} for radius {radius}")]
    DimensionMismatch {
        width: u32,
        height: u32,
        expected: u32,
        radius: u32,
    },

    #[error("radius {0} below minimum of {min}", min = crate::image::MIN_RADIUS)]
    RadiusTooSmall(u32),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid keypoint: {0}")]
    InvalidKeypoint(String),

    #[error("image side {side} too small for {octaves} octaves (needs at least {needed})")]
    ImageTooSmall {
        side: usize,
        octaves: usize,
        needed: usize,
    },

    #[error("no measurable gradients: every pair coincides with an image center")]
    NoMeasurableGradients,

    #[error("both classes required: need at least one genuine and one impostor score")]
    BothClassesRequired,

    #[error("empty score list")]
    EmptyScores,

    #[error("no samples found under {0}")]
    NoSamples(PathBuf),

    #[error("index row {row}: {message}")]
    IndexRow { row: usize, message: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Decode { .. } => "decode",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::RadiusTooSmall(_) => "radius_too_small",
            Error::InvalidImage(_) => "invalid_image",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidKeypoint(_) => "invalid_keypoint",
            Error::ImageTooSmall { .. } => "image_too_small",
            Error::NoMeasurableGradients => "no_measurable_gradients",
            Error::BothClassesRequired => "both_classes_required",
            Error::EmptyScores => "empty_scores",
            Error::NoSamples(_) => "no_samples",
            Error::IndexRow { .. } => "index_row",
            Error::Manifest(_) => "manifest",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
