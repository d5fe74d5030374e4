use crate::image::Raster;

use super::extrema::Candidate;
use super::scale_space::ScaleSpace;

pub const ORIENTATION_BINS: usize = 36;
const WINDOW_SIGMA_FACTOR: f64 = 1.5;
const WINDOW_RADIUS_FACTOR: f64 = 3.0 * WINDOW_SIGMA_FACTOR;
const PEAK_RATIO: f64 = 0.8;

/// A located, oriented keypoint that has no descriptor yet.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointStub {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    /// Degrees in `[0, 360)`.
    pub orientation: f64,
    pub octave: usize,
    /// Gaussian layer used for gradient sampling.
    pub gaussian_layer: usize,
    pub octave_x: f64,
    pub octave_y: f64,
    /// Blur in octave pixel units.
    pub octave_sigma: f64,
}

/// Central-difference gradient `(gx, gy)` with y pointing down.
#[inline]
pub(crate) fn gradient(img: &Raster, col: usize, row: usize) -> (f64, f64) {
    (
        img.get(col + 1, row) - img.get(col - 1, row),
        img.get(col, row + 1) - img.get(col, row - 1),
    )
}

/// Angle of `(gx, gy)` in degrees, `[0, 360)`.
#[inline]
pub(crate) fn angle_deg(gx: f64, gy: f64) -> f64 {
    wrap_degrees(gy.atan2(gx).to_degrees())
}

#[inline]
pub(crate) fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Nearest Gaussian layer for a fractional DoG layer.
pub(crate) fn gaussian_layer_for(space: &ScaleSpace, octave_layer: f64) -> usize {
    let last = space.octaves[0].gaussians.len() - 1;
    (octave_layer.round().max(0.0) as usize).min(last)
}

/// Accumulates a Gaussian-weighted 36-bin gradient orientation histogram
/// around the candidate and returns one stub per peak within 80% of the
/// highest. Candidates whose window leaves the raster yield nothing.
pub fn assign_orientation(space: &ScaleSpace, candidate: &Candidate) -> Vec<KeypointStub> {
    let octave = &space.octaves[candidate.octave];
    let layer = gaussian_layer_for(space, candidate.octave_layer);
    let img = &octave.gaussians[layer];
    let octave_sigma = space.layer_sigma(candidate.octave_layer);

    let Some(hist) = orientation_histogram(
        img,
        candidate.octave_x,
        candidate.octave_y,
        octave_sigma,
    ) else {
        return Vec::new();
    };

    let max = hist.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let n = ORIENTATION_BINS;
    let mut stubs = Vec::new();
    for b in 0..n {
        let left = hist[(b + n - 1) % n];
        let right = hist[(b + 1) % n];
        let c = hist[b];
        if c > left && c >= right && c >= PEAK_RATIO * max {
            let denom = left - 2.0 * c + right;
            let offset = if denom != 0.0 {
                0.5 * (left - right) / denom
            } else {
                0.0
            };
            let orientation = wrap_degrees((b as f64 + offset) * 360.0 / n as f64);
            stubs.push(KeypointStub {
                x: candidate.x,
                y: candidate.y,
                sigma: candidate.sigma,
                orientation,
                octave: candidate.octave,
                gaussian_layer: layer,
                octave_x: candidate.octave_x,
                octave_y: candidate.octave_y,
                octave_sigma,
            });
        }
    }
    stubs
}

/// Smoothed orientation histogram; bin `b` is centered on `b * 10` degrees.
/// `None` when the sampling window does not fit inside the raster.
pub(crate) fn orientation_histogram(
    img: &Raster,
    x: f64,
    y: f64,
    sigma: f64,
) -> Option<[f64; ORIENTATION_BINS]> {
    let radius = (WINDOW_RADIUS_FACTOR * sigma).round().max(1.0) as isize;
    let ci = x.round() as isize;
    let ri = y.round() as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    if ci - radius < 1 || ri - radius < 1 || ci + radius > w - 2 || ri + radius > h - 2 {
        return None;
    }
    let weight_sigma = WINDOW_SIGMA_FACTOR * sigma;
    let denom = 2.0 * weight_sigma * weight_sigma;
    let n = ORIENTATION_BINS as f64;
    let mut raw = [0.0; ORIENTATION_BINS];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let col = (ci + dx) as usize;
            let row = (ri + dy) as usize;
            let ox = col as f64 - x;
            let oy = row as f64 - y;
            let dist2 = ox * ox + oy * oy;
            if dist2 > (radius * radius) as f64 {
                continue;
            }
            let (gx, gy) = gradient(img, col, row);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let weight = (-dist2 / denom).exp();
            let pos = angle_deg(gx, gy) * n / 360.0;
            let b0 = pos.floor();
            let frac = pos - b0;
            let b0 = (b0 as usize) % ORIENTATION_BINS;
            let b1 = (b0 + 1) % ORIENTATION_BINS;
            raw[b0] += weight * mag * (1.0 - frac);
            raw[b1] += weight * mag * frac;
        }
    }
    let m = ORIENTATION_BINS;
    let mut hist = [0.0; ORIENTATION_BINS];
    for (b, out) in hist.iter_mut().enumerate() {
        *out = (raw[(b + m - 2) % m] + raw[(b + 2) % m]) / 16.0
            + 4.0 * (raw[(b + m - 1) % m] + raw[(b + 1) % m]) / 16.0
            + 6.0 * raw[b] / 16.0;
    }
    Some(hist)
}
