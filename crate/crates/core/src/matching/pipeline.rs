use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SiftParams};
use crate::error::Result;
use crate::image::IrisImage;
use crate::keypoint::KeypointSet;
use crate::sift;

use super::gradient::{strata2_filter, GradientHistogram, PeakVerdict};
use super::scale::{center_distance, strata3_filter};
use super::strata1::strata1_match;
use super::types::MatchSet;

/// All three match sets of one comparison plus the evidence behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult {
    pub r: MatchSet,
    pub rinter: MatchSet,
    pub rnew: MatchSet,
    pub histogram: Option<GradientHistogram>,
    pub verdict: Option<PeakVerdict>,
    /// Probe radius over gallery radius.
    pub sf: f64,
    pub gallery_radius: f64,
    pub probe_radius: f64,
}

impl PipelineResult {
    pub fn etas(&self) -> Etas {
        Etas {
            r: self.r.eta(),
            rinter: self.rinter.eta(),
            rnew: self.rnew.eta(),
        }
    }

    /// Builds the diagnostic record. `gamma` and `psi` are evaluated for
    /// every pair of `R`, whether or not it survived.
    pub fn diagnostics(
        &self,
        gallery: &KeypointSet,
        probe: &KeypointSet,
        config: &PipelineConfig,
    ) -> Diagnostics {
        let pairs = self
            .r
            .pairs
            .iter()
            .map(|p| {
                let gamma = super::gradient::compute_gamma(
                    p.i,
                    p.j,
                    self.gallery_radius,
                    self.probe_radius,
                    gallery,
                    probe,
                );
                let d1 = center_distance(gallery.get(p.i), self.gallery_radius);
                let psi = (d1 > 0.0)
                    .then(|| center_distance(probe.get(p.j), self.probe_radius) / d1);
                PairDiagnostic {
                    i: p.i,
                    j: p.j,
                    descriptor_distance: p.descriptor_distance,
                    gamma,
                    psi,
                    in_rinter: self.rinter.pairs.iter().any(|q| q.i == p.i && q.j == p.j),
                    in_rnew: self.rnew.pairs.iter().any(|q| q.i == p.i && q.j == p.j),
                }
            })
            .collect();
        Diagnostics {
            gallery_id: gallery.source_image_id.clone(),
            probe_id: probe.source_image_id.clone(),
            gallery_radius: self.gallery_radius,
            probe_radius: self.probe_radius,
            gallery_keypoints: gallery.cardinality(),
            probe_keypoints: probe.cardinality(),
            sf: self.sf,
            config: config.clone(),
            eta: self.etas(),
            histogram: self.histogram.clone(),
            verdict: self.verdict.clone(),
            r: self.r.clone(),
            rinter: self.rinter.clone(),
            rnew: self.rnew.clone(),
            pairs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Etas {
    pub r: usize,
    pub rinter: usize,
    pub rnew: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostic {
    pub i: usize,
    pub j: usize,
    pub descriptor_distance: f64,
    pub gamma: Option<f64>,
    pub psi: Option<f64>,
    pub in_rinter: bool,
    pub in_rnew: bool,
}

/// Per-comparison diagnostic dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub gallery_id: String,
    pub probe_id: String,
    pub gallery_radius: f64,
    pub probe_radius: f64,
    pub gallery_keypoints: usize,
    pub probe_keypoints: usize,
    pub sf: f64,
    pub config: PipelineConfig,
    pub eta: Etas,
    pub histogram: Option<GradientHistogram>,
    pub verdict: Option<PeakVerdict>,
    pub r: MatchSet,
    pub rinter: MatchSet,
    pub rnew: MatchSet,
    pub pairs: Vec<PairDiagnostic>,
}

impl Diagnostics {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs pairing, gradient filtering and scale filtering on two keypoint sets.
pub fn match_keypoints(
    gallery: &KeypointSet,
    gallery_radius: f64,
    probe: &KeypointSet,
    probe_radius: f64,
    config: &PipelineConfig,
) -> Result<PipelineResult> {
    config.validate()?;
    if !(gallery_radius > 0.0 && probe_radius > 0.0) {
        return Err(crate::error::Error::InvalidConfig(
            "radii must be positive".into(),
        ));
    }
    let r = strata1_match(gallery, probe, config.nn_ratio_threshold);
    let outcome = strata2_filter(&r, gallery, gallery_radius, probe, probe_radius, config);
    let rnew = strata3_filter(
        &outcome.rinter,
        gallery,
        gallery_radius,
        probe,
        probe_radius,
        config.scale_tolerance,
    );
    Ok(PipelineResult {
        r,
        rinter: outcome.rinter,
        rnew,
        histogram: outcome.histogram,
        verdict: outcome.verdict,
        sf: probe_radius / gallery_radius,
        gallery_radius,
        probe_radius,
    })
}

/// Detects keypoints in both images and matches them.
pub fn match_images(
    gallery: &IrisImage,
    probe: &IrisImage,
    params: &SiftParams,
    config: &PipelineConfig,
) -> Result<(PipelineResult, KeypointSet, KeypointSet)> {
    let kg = sift::detect(gallery, params)?;
    let kp = sift::detect(probe, params)?;
    let result = match_keypoints(
        &kg,
        f64::from(gallery.radius()),
        &kp,
        f64::from(probe.radius()),
        config,
    )?;
    Ok((result, kg, kp))
}
