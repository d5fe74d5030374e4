use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Which stage produced a match set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stratum {
    /// Descriptor pairing.
    R,
    /// After gradient filtering.
    Rinter,
    /// After scale filtering.
    Rnew,
}

/// Gallery keypoint `i` paired with probe keypoint `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub i: usize,
    pub j: usize,
    pub descriptor_distance: f64,
    /// Rotation gradient in degrees; `None` until gradient filtering runs.
    pub gamma: Option<f64>,
    /// Local scaling factor; `None` until scale filtering runs.
    pub psi: Option<f64>,
}

impl MatchPair {
    pub fn new(i: usize, j: usize, descriptor_distance: f64) -> Self {
        Self {
            i,
            j,
            descriptor_distance,
            gamma: None,
            psi: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub stratum: Stratum,
    pub pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn new(stratum: Stratum, pairs: Vec<MatchPair>) -> Self {
        Self { stratum, pairs }
    }

    pub fn empty(stratum: Stratum) -> Self {
        Self::new(stratum, Vec::new())
    }

    /// Match count.
    #[inline]
    pub fn eta(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|p| (p.i, p.j)).collect()
    }

    /// True when every `(i, j)` of `self` also occurs in `other`.
    pub fn is_subset_of(&self, other: &MatchSet) -> bool {
        let outer: HashSet<_> = other.pairs.iter().map(|p| (p.i, p.j)).collect();
        self.pairs.iter().all(|p| outer.contains(&(p.i, p.j)))
    }

    /// No gallery or probe index occurs twice.
    pub fn is_one_to_one(&self) -> bool {
        let mut gi = HashSet::new();
        let mut pj = HashSet::new();
        self.pairs.iter().all(|p| gi.insert(p.i) && pj.insert(p.j))
    }
}
