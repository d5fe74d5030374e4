//! Keypoint matching for localized iris images.
//!
//! Keypoints come from a difference-of-Gaussians detector ([`sift`]). Two
//! keypoint sets are paired by descriptor distance and then filtered twice
//! ([`matching`]): once for agreement with the dominant rotation about the
//! image centers, once for agreement with the ratio of iris radii. The
//! surviving match count is the verification score ([`eval`]).

pub mod config;
pub mod error;
pub mod eval;
pub mod harness;
pub mod image;
pub mod keypoint;
pub mod matching;
pub mod sift;

pub use config::{PipelineConfig, SiftParams};
pub use error::{Error, Result};
pub use image::{load_image, DimensionPolicy, IrisImage, Raster};
pub use keypoint::{Keypoint, KeypointSet};
pub use matching::{match_images, match_keypoints, MatchSet, PipelineResult, Stratum};
