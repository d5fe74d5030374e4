use crate::keypoint::{Keypoint, KeypointSet};

use super::types::{MatchSet, Stratum};

/// Distance of a keypoint from `(r, r)`.
#[inline]
pub fn center_distance(kp: &Keypoint, radius: f64) -> f64 {
    (kp.x - radius).hypot(kp.y - radius)
}

/// Keeps pairs whose local scaling factor `d2 / d1` lies in the closed
/// interval `[sf - tolerance, sf + tolerance]`, where `sf` is the probe
/// radius over the gallery radius. Pairs whose gallery keypoint sits on the
/// center are dropped. Every retained pair carries its `psi`.
pub fn strata3_filter(
    rinter: &MatchSet,
    gallery: &KeypointSet,
    gallery_radius: f64,
    probe: &KeypointSet,
    probe_radius: f64,
    tolerance: f64,
) -> MatchSet {
    let sf = probe_radius / gallery_radius;
    let (lo, hi) = (sf - tolerance, sf + tolerance);
    let pairs = rinter
        .pairs
        .iter()
        .filter_map(|pair| {
            let d1 = center_distance(gallery.get(pair.i), gallery_radius);
            if d1 == 0.0 {
                return None;
            }
            let d2 = center_distance(probe.get(pair.j), probe_radius);
            let psi = d2 / d1;
            (lo..=hi).contains(&psi).then(|| {
                let mut p = pair.clone();
                p.psi = Some(psi);
                p
            })
        })
        .collect();
    MatchSet::new(Stratum::Rnew, pairs)
}
