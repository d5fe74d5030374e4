//! Rotation-consistency filtering: per-pair rotation gradient, circular
//! histogram, merged peak and angular retention.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::keypoint::{Keypoint, KeypointSet};

use super::types::{MatchSet, Stratum};

/// Angle of a keypoint about `(r, r)` in degrees, `[0, 360)`. `None` when
/// the keypoint sits exactly on the center.
pub fn polar_angle(kp: &Keypoint, radius: f64) -> Option<f64> {
    let (dx, dy) = (kp.x - radius, kp.y - radius);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(wrap360(dy.atan2(dx).to_degrees()))
}

#[inline]
fn wrap360(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// `(phi - theta) mod 360`, in `[0, 360)`.
#[inline]
pub fn rotation_gradient(theta: f64, phi: f64) -> f64 {
    wrap360(phi - theta)
}

/// Rotation gradient of pair `(i, j)`, angles taken about each image's center.
/// `None` for center-coincident (degenerate) keypoints.
pub fn compute_gamma(
    i: usize,
    j: usize,
    gallery_radius: f64,
    probe_radius: f64,
    gallery: &KeypointSet,
    probe: &KeypointSet,
) -> Option<f64> {
    let theta = polar_angle(gallery.get(i), gallery_radius)?;
    let phi = polar_angle(probe.get(j), probe_radius)?;
    Some(rotation_gradient(theta, phi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientHistogram {
    pub bins: Vec<usize>,
    pub bin_width: f64,
    /// Histogrammed (non-degenerate) pairs.
    pub total: usize,
    /// Pairs left out because a keypoint coincided with its center.
    pub degenerate: usize,
    /// Center bin of the densest three-bin window.
    pub peak_index: usize,
    /// Count in that window.
    pub peak_density: usize,
    /// Central angle of the peak bin in degrees.
    pub peak_center: f64,
}

impl GradientHistogram {
    /// Bins the given gradients (degrees, `[0, 360)`) and locates the merged peak.
    ///
    /// The merged peak is the window made of a bin and its two circular
    /// neighbors with the largest total. Equal windows are resolved by the
    /// count of their center bin, then by the lower center index.
    pub fn from_gammas(gammas: &[f64], nobins: usize, degenerate: usize) -> Result<Self> {
        if nobins == 0 {
            return Err(Error::InvalidConfig("nobins must be positive".into()));
        }
        if gammas.is_empty() {
            return Err(Error::NoMeasurableGradients);
        }
        let bin_width = 360.0 / nobins as f64;
        let mut bins = vec![0usize; nobins];
        for &g in gammas {
            bins[bin_index(g, bin_width, nobins)] += 1;
        }
        let (peak_index, peak_density) = merged_peak(&bins);
        Ok(Self {
            bins,
            bin_width,
            total: gammas.len(),
            degenerate,
            peak_index,
            peak_density,
            peak_center: (peak_index as f64 + 0.5) * bin_width,
        })
    }

    pub fn bin_of(&self, gamma: f64) -> usize {
        bin_index(gamma, self.bin_width, self.bins.len())
    }
}

#[inline]
fn bin_index(gamma: f64, bin_width: f64, nobins: usize) -> usize {
    ((gamma / bin_width).floor().max(0.0) as usize).min(nobins - 1)
}

fn window_density(bins: &[usize], center: usize) -> usize {
    let n = bins.len();
    let mut members = [center, (center + n - 1) % n, (center + 1) % n];
    members.sort_unstable();
    let mut total = 0;
    let mut last = None;
    for m in members {
        if last != Some(m) {
            total += bins[m];
            last = Some(m);
        }
    }
    total
}

fn merged_peak(bins: &[usize]) -> (usize, usize) {
    let mut best = (0usize, window_density(bins, 0));
    for b in 1..bins.len() {
        let d = window_density(bins, b);
        if d > best.1 || (d == best.1 && bins[b] > bins[best.0]) {
            best = (b, d);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakClass {
    Strong,
    Weak,
    Intermediate,
}

/// Circular interval running counterclockwise from `low` to `high`
/// (both in `[0, 360)`), ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularRange {
    pub low: f64,
    pub high: f64,
    pub span: f64,
}

impl AngularRange {
    pub fn around(center: f64, half_width: f64) -> Self {
        Self {
            low: wrap360(center - half_width),
            high: wrap360(center + half_width),
            span: 2.0 * half_width,
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        (angle - self.low).rem_euclid(360.0) <= self.span
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakVerdict {
    pub classification: PeakClass,
    /// Present only for strong peaks.
    pub retained_range: Option<AngularRange>,
}

/// Strong when the merged peak holds at least `hp_percent` of the matches,
/// weak when it holds at most `lp_percent`, intermediate otherwise.
pub fn classify_peak(
    hist: &GradientHistogram,
    hp_percent: f64,
    lp_percent: f64,
    angular_half_width: f64,
) -> PeakVerdict {
    let density = hist.peak_density as f64 * 100.0;
    let total = hist.total as f64;
    let classification = if density >= hp_percent * total {
        PeakClass::Strong
    } else if density <= lp_percent * total {
        PeakClass::Weak
    } else {
        PeakClass::Intermediate
    };
    let retained_range = (classification == PeakClass::Strong)
        .then(|| AngularRange::around(hist.peak_center, angular_half_width));
    PeakVerdict {
        classification,
        retained_range,
    }
}

/// Result of gradient filtering, with the evidence it was based on.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientFilterOutcome {
    pub rinter: MatchSet,
    /// `R` with `gamma` populated on every non-degenerate pair.
    pub annotated: MatchSet,
    /// `None` when no pair had a measurable gradient.
    pub histogram: Option<GradientHistogram>,
    pub verdict: Option<PeakVerdict>,
}

/// Keeps the pairs of `r` whose rotation gradient falls inside the range
/// around a strong peak. Without a strong peak the result is empty.
pub fn strata2_filter(
    r: &MatchSet,
    gallery: &KeypointSet,
    gallery_radius: f64,
    probe: &KeypointSet,
    probe_radius: f64,
    config: &PipelineConfig,
) -> GradientFilterOutcome {
    let mut annotated = r.clone();
    let mut gammas = Vec::with_capacity(r.eta());
    for pair in &mut annotated.pairs {
        pair.gamma = compute_gamma(pair.i, pair.j, gallery_radius, probe_radius, gallery, probe);
        gammas.extend(pair.gamma);
    }
    let degenerate = r.eta() - gammas.len();
    let histogram = GradientHistogram::from_gammas(&gammas, config.nobins, degenerate).ok();
    let verdict = histogram.as_ref().map(|h| {
        classify_peak(
            h,
            config.hp_percent,
            config.lp_percent,
            config.angular_half_width,
        )
    });
    let pairs = match verdict.as_ref().and_then(|v| v.retained_range) {
        Some(range) => annotated
            .pairs
            .iter()
            .filter(|p| p.gamma.is_some_and(|g| range.contains(g)))
            .cloned()
            .collect(),
        None => Vec::new(),
    };
    GradientFilterOutcome {
        rinter: MatchSet::new(Stratum::Rinter, pairs),
        annotated,
        histogram,
        verdict,
    }
}
