//! Three-stage keypoint matching.
//!
//! 1. [`strata1_match`] pairs descriptors greedily (`R`).
//! 2. [`strata2_filter`] keeps pairs whose rotation about the image centers
//!    agrees with the dominant rotation (`Rinter`).
//! 3. [`strata3_filter`] keeps pairs whose radial scaling agrees with the
//!    ratio of iris radii (`Rnew`).
//!
//! Each stage only removes pairs, so `Rnew ⊆ Rinter ⊆ R`.

mod gradient;
mod pipeline;
mod scale;
mod strata1;
mod types;

pub use gradient::{
    classify_peak, compute_gamma, polar_angle, rotation_gradient, strata2_filter, AngularRange,
    GradientFilterOutcome, GradientHistogram, PeakClass, PeakVerdict,
};
pub use pipeline::{
    match_images, match_keypoints, Diagnostics, Etas, PairDiagnostic, PipelineResult,
};
pub use scale::{center_distance, strata3_filter};
pub use strata1::strata1_match;
pub use types::{MatchPair, MatchSet, Stratum};
