//! Difference-of-Gaussians keypoint detection and 128-d gradient descriptors.
//!
//! [`detect`] runs the full chain: scale space, extremum detection,
//! orientation assignment and descriptor extraction. Output is sorted by
//! `(y, x, sigma, orientation)` and free of exact duplicates, so a given
//! image and parameter set always produces the same [`KeypointSet`].

mod blur;
mod descriptor;
mod extrema;
mod orientation;
mod scale_space;

pub use blur::{downsample_half, gaussian_blur, GaussianKernel};
pub use descriptor::compute_descriptor;
pub use extrema::{detect_keypoints, Candidate};
pub use orientation::{assign_orientation, KeypointStub, ORIENTATION_BINS};
pub use scale_space::{
    build_scale_space, build_scale_space_from_raster, max_octaves, Octave, ScaleSpace,
};

use crate::config::SiftParams;
use crate::error::{Error, Result};
use crate::image::IrisImage;
use crate::keypoint::{Keypoint, KeypointSet};

pub fn detect(image: &IrisImage, params: &SiftParams) -> Result<KeypointSet> {
    params.validate()?;
    let side = image.side();
    let octaves = params.octaves.unwrap_or_else(|| max_octaves(side));
    if octaves == 0 {
        return Err(Error::ImageTooSmall {
            side,
            octaves: 1,
            needed: 8,
        });
    }
    let space = build_scale_space_from_raster(
        image.raster(),
        octaves,
        params.scales_per_octave,
        params.base_sigma,
        params.assumed_blur,
    )?;
    let mut keypoints: Vec<Keypoint> =
        detect_keypoints(&space, params.contrast_threshold, params.edge_ratio_threshold)
            .iter()
            .flat_map(|c| assign_orientation(&space, c))
            .filter_map(|stub| compute_descriptor(&space, &stub))
            .collect();
    canonicalize(&mut keypoints);
    Ok(KeypointSet::new(keypoints, image.id()))
}

fn canonicalize(keypoints: &mut Vec<Keypoint>) {
    keypoints.sort_by(|a, b| {
        a.y.total_cmp(&b.y)
            .then(a.x.total_cmp(&b.x))
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.orientation.total_cmp(&b.orientation))
    });
    keypoints.dedup_by(|a, b| {
        a.x == b.x && a.y == b.y && a.sigma == b.sigma && a.orientation == b.orientation
    });
}
