use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 4x4 spatial cells times 8 orientation bins.
pub const DESCRIPTOR_LEN: usize = 128;

/// A detected keypoint in base-image pixel coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Detection scale in base-image pixels.
    pub sigma: f64,
    /// Dominant gradient direction in degrees, `[0, 360)`.
    pub orientation: f64,
    /// L2-normalized, non-negative.
    pub descriptor: Vec<f32>,
}

impl Keypoint {
    pub fn descriptor_norm(&self) -> f64 {
        self.descriptor
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance between descriptors.
    pub fn descriptor_distance(&self, other: &Keypoint) -> f64 {
        descriptor_distance(&self.descriptor, &other.descriptor)
    }

    /// Checks bounds against a `2r x 2r` raster and the descriptor invariants.
    pub fn validate(&self, radius: Option<u32>) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidKeypoint(msg));
        if !(self.x.is_finite() && self.y.is_finite()) {
            return bad("non-finite position".into());
        }
        if let Some(r) = radius {
            let side = 2.0 * f64::from(r);
            if !(0.0..side).contains(&self.x) || !(0.0..side).contains(&self.y) {
                return bad(format!(
                    "position ({}, {}) outside [0, {side})",
                    self.x, self.y
                ));
            }
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be positive", self.sigma));
        }
        if !(0.0..360.0).contains(&self.orientation) {
            return bad(format!("orientation {} outside [0, 360)", self.orientation));
        }
        if self.descriptor.len() != DESCRIPTOR_LEN {
            return bad(format!(
                "descriptor has {} entries, expected {DESCRIPTOR_LEN}",
                self.descriptor.len()
            ));
        }
        if self.descriptor.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("descriptor entries must be finite and non-negative".into());
        }
        let norm = self.descriptor_norm();
        if (norm - 1.0).abs() > 1e-6 {
            return bad(format!("descriptor norm {norm} is not 1"));
        }
        Ok(())
    }
}

#[inline]
pub fn descriptor_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Keypoints detected in one image, in canonical `(y, x, sigma, orientation)` order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeypointSet {
    pub keypoints: Vec<Keypoint>,
    pub source_image_id: String,
}

impl KeypointSet {
    pub fn new(keypoints: Vec<Keypoint>, source_image_id: impl Into<String>) -> Self {
        Self {
            keypoints,
            source_image_id: source_image_id.into(),
        }
    }

    #[inline]
    pub fn cardinality(&self) -> usize {
        self.keypoints.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> &Keypoint {
        &self.keypoints[index]
    }

    /// Serializes as a bare JSON array of keypoint objects
    /// (`x`, `y`, `sigma`, `orientation`, `descriptor`).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.keypoints)?)
    }

    pub fn from_json(text: &str, source_image_id: impl Into<String>) -> Result<Self> {
        let keypoints: Vec<Keypoint> = serde_json::from_str(text)?;
        for (idx, kp) in keypoints.iter().enumerate() {
            kp.validate(None).map_err(|e| {
                Error::InvalidKeypoint(format!("keypoint {idx}: {e}"))
            })?;
        }
        Ok(Self::new(keypoints, source_image_id))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Loads a keypoint JSON file; the set id is the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_json(&text, id)
    }
}
