use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Label;
use crate::image::MIN_RADIUS;

/// Known transform of a synthetic instance relative to its subject's texture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Rotation about the center in degrees (image coordinates, y down).
    pub rotation_deg: f64,
    /// Radius of this instance over the subject's base radius.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub subject_id: String,
    pub instance_id: String,
    /// Relative to the manifest root unless absolute.
    pub path: PathBuf,
    pub radius: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl Sample {
    pub fn id(&self) -> String {
        format!("{}/{}", self.subject_id, self.instance_id)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenuinePolicy {
    /// Every unordered pair of instances of the same subject.
    #[default]
    AllWithinSubject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ImpostorPolicy {
    /// For each probe, one seeded random instance of every other subject.
    OnePerOtherSubject { seed: u64 },
    /// Every unordered pair of samples from different subjects.
    AllPairs,
}

impl Default for ImpostorPolicy {
    fn default() -> Self {
        ImpostorPolicy::OnePerOtherSubject { seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub genuine: GenuinePolicy,
    pub impostor: ImpostorPolicy,
}

/// One comparison to run: indices into the manifest's samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparisonPair {
    pub gallery: usize,
    pub probe: usize,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub samples: Vec<Sample>,
    #[serde(default)]
    pub protocol: Protocol,
}

impl DatasetManifest {
    pub fn resolve(&self, sample: &Sample) -> PathBuf {
        if sample.path.is_absolute() {
            sample.path.clone()
        } else {
            self.root.join(&sample.path)
        }
    }

    /// Subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.samples
            .iter()
            .filter(|s| seen.insert(s.subject_id.as_str()))
            .map(|s| s.subject_id.as_str())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::NoSamples(self.root.clone()));
        }
        let mut ids = HashSet::new();
        for s in &self.samples {
            if !ids.insert((s.subject_id.as_str(), s.instance_id.as_str())) {
                return Err(Error::Manifest(format!("duplicate sample {}", s.id())));
            }
            if s.radius < MIN_RADIUS {
                return Err(Error::Manifest(format!(
                    "sample {} has radius {} below {MIN_RADIUS}",
                    s.id(),
                    s.radius
                )));
            }
            let path = self.resolve(s);
            if !path.is_file() {
                return Err(Error::Manifest(format!(
                    "sample {} missing file {}",
                    s.id(),
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Genuine pairs first (per subject, manifest order), then impostor pairs.
    pub fn pairs(&self) -> Vec<ComparisonPair> {
        let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (idx, s) in self.samples.iter().enumerate() {
            by_subject.entry(&s.subject_id).or_default().push(idx);
        }
        let mut out = Vec::new();
        for subject in self.subjects() {
            let members = &by_subject[subject];
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    out.push(ComparisonPair {
                        gallery: a,
                        probe: b,
                        label: Label::Genuine,
                    });
                }
            }
        }
        match self.protocol.impostor {
            ImpostorPolicy::OnePerOtherSubject { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let subjects = self.subjects();
                for (probe, s) in self.samples.iter().enumerate() {
                    for other in subjects.iter().filter(|o| **o != s.subject_id) {
                        let members = &by_subject[other];
                        let gallery = members[rng.random_range(0..members.len())];
                        out.push(ComparisonPair {
                            gallery,
                            probe,
                            label: Label::Impostor,
                        });
                    }
                }
            }
            ImpostorPolicy::AllPairs => {
                for a in 0..self.samples.len() {
                    for b in a + 1..self.samples.len() {
                        if self.samples[a].subject_id != self.samples[b].subject_id {
                            out.push(ComparisonPair {
                                gallery: a,
                                probe: b,
                                label: Label::Impostor,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Loads a manifest; a relative `root` is taken relative to the
    /// manifest file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest = serde_json::from_str(&text)?;
        if m.root.is_relative() {
            let dir = path.parent().unwrap_or(Path::new("."));
            m.root = dir.join(&m.root);
        }
        m.validate()?;
        Ok(m)
    }
}
