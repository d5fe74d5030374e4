use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matching and decision parameters. The JSON form uses these field names
/// verbatim; missing fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Gradient histogram bin count.
    pub nobins: usize,
    /// A merged peak holding at least this percentage of the matches is strong.
    pub hp_percent: f64,
    /// A merged peak holding at most this percentage of the matches is weak.
    pub lp_percent: f64,
    /// Half-width in degrees of the retained angular range around the peak center.
    pub angular_half_width: f64,
    /// Tolerance around the global scaling factor.
    pub scale_tolerance: f64,
    /// Nearest / second-nearest descriptor distance ratio bound for pairing.
    pub nn_ratio_threshold: f64,
    /// Minimum match count for a genuine verdict.
    pub decision_threshold: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            nobins: 10,
            hp_percent: 60.0,
            lp_percent: 30.0,
            angular_half_width: 90.0,
            scale_tolerance: 0.2,
            nn_ratio_threshold: 0.8,
            decision_threshold: 5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.nobins == 0 {
            return bad("nobins must be positive".into());
        }
        if !(self.hp_percent > 0.0 && self.hp_percent <= 100.0) {
            return bad(format!("hp_percent {} outside (0, 100]", self.hp_percent));
        }
        if !(self.lp_percent >= 0.0 && self.lp_percent < self.hp_percent) {
            return bad(format!(
                "lp_percent {} outside [0, hp_percent = {})",
                self.lp_percent, self.hp_percent
            ));
        }
        if !(self.angular_half_width > 0.0 && self.angular_half_width <= 180.0) {
            return bad(format!(
                "angular_half_width {} outside (0, 180]",
                self.angular_half_width
            ));
        }
        if !(self.scale_tolerance > 0.0 && self.scale_tolerance.is_finite()) {
            return bad(format!("scale_tolerance {} must be > 0", self.scale_tolerance));
        }
        if !(self.nn_ratio_threshold > 0.0 && self.nn_ratio_threshold < 1.0) {
            return bad(format!(
                "nn_ratio_threshold {} outside (0, 1)",
                self.nn_ratio_threshold
            ));
        }
        if self.decision_threshold == 0 {
            return bad("decision_threshold must be positive".into());
        }
        Ok(())
    }

    /// Parses and validates a JSON config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Keypoint detector parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftParams {
    /// Octave count; `None` uses as many as the image side allows.
    pub octaves: Option<usize>,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    /// Blur already present in the input raster.
    pub assumed_blur: f64,
    /// Minimum `|DoG|` at the refined extremum (intensities in `[0, 1]`).
    pub contrast_threshold: f64,
    /// Principal curvature ratio bound for edge rejection.
    pub edge_ratio_threshold: f64,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            octaves: None,
            scales_per_octave: 3,
            base_sigma: 1.6,
            assumed_blur: 0.5,
            contrast_threshold: 0.03,
            edge_ratio_threshold: 10.0,
        }
    }
}

impl SiftParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.octaves == Some(0) {
            return bad("octaves must be positive");
        }
        if self.scales_per_octave < 2 {
            return bad("scales_per_octave must be at least 2");
        }
        if !(self.base_sigma > 0.0 && self.base_sigma.is_finite()) {
            return bad("base_sigma must be positive");
        }
        if !(self.assumed_blur >= 0.0 && self.assumed_blur < self.base_sigma) {
            return bad("assumed_blur must lie in [0, base_sigma)");
        }
        if !(self.contrast_threshold >= 0.0) {
            return bad("contrast_threshold must be non-negative");
        }
        if !(self.edge_ratio_threshold > 1.0) {
            return bad("edge_ratio_threshold must exceed 1");
        }
        Ok(())
    }
}
