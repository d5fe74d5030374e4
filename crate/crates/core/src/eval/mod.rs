//! Verification decisions and error measures over match-count scores.
//!
//! Scores are match counts (`eta`), so thresholds are integers and the
//! decision rule is `eta >= threshold`. Accuracy follows the convention
//! `ACC = 100 - (FAR + FRR) / 2`, with all rates in percent.

mod io;
mod svg;

pub use io::{read_scores, write_curves, write_scores, ScoreRecord};
pub use svg::{accuracy_svg, histogram_svg, roc_svg};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Textual statement of the accuracy convention, echoed in reports.
pub const ACC_CONVENTION: &str = "ACC = 100 - (FAR + FRR) / 2";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Impostor,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Impostor => "impostor",
        })
    }
}

/// Which match count serves as the score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StratumLevel {
    I,
    II,
    III,
}

impl StratumLevel {
    pub const ALL: [StratumLevel; 3] = [StratumLevel::I, StratumLevel::II, StratumLevel::III];

    pub fn number(self) -> u8 {
        match self {
            StratumLevel::I => 1,
            StratumLevel::II => 2,
            StratumLevel::III => 3,
        }
    }
}

impl FromStr for StratumLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "I" | "i" => Ok(StratumLevel::I),
            "2" | "II" | "ii" => Ok(StratumLevel::II),
            "3" | "III" | "iii" => Ok(StratumLevel::III),
            other => Err(Error::InvalidConfig(format!(
                "stratum must be 1, 2 or 3, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonScore {
    pub gallery_id: String,
    pub probe_id: String,
    pub eta_final: usize,
    pub label: Label,
    pub stratum_used: StratumLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Accept iff `eta_final >= threshold`.
pub fn decide(score: &ComparisonScore, threshold: u32) -> Decision {
    if score.eta_final >= threshold as usize {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Percent of impostor comparisons accepted.
    pub far: f64,
    /// Percent of genuine comparisons rejected.
    pub frr: f64,
    pub acc: f64,
    /// Separability of the genuine and impostor score distributions.
    /// Infinite when both classes have zero spread and different means.
    pub d_prime: f64,
    pub threshold: u32,
}

/// `|mu_g - mu_i| / sqrt((var_g + var_i) / 2)` with population variances.
pub fn d_prime(genuine: &[f64], impostor: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    };
    let (mg, vg) = stats(genuine);
    let (mi, vi) = stats(impostor);
    let diff = (mg - mi).abs();
    let spread = ((vg + vi) / 2.0).sqrt();
    if spread == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / spread
    }
}

fn split(scores: &[ComparisonScore]) -> Result<(Vec<usize>, Vec<usize>)> {
    let genuine: Vec<usize> = scores
        .iter()
        .filter(|s| s.label == Label::Genuine)
        .map(|s| s.eta_final)
        .collect();
    let impostor: Vec<usize> = scores
        .iter()
        .filter(|s| s.label == Label::Impostor)
        .map(|s| s.eta_final)
        .collect();
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::BothClassesRequired);
    }
    Ok((genuine, impostor))
}

fn report_for(genuine: &[usize], impostor: &[usize], threshold: u32, d: f64) -> ErrorReport {
    let t = threshold as usize;
    let false_accepts = impostor.iter().filter(|&&e| e >= t).count();
    let false_rejects = genuine.iter().filter(|&&e| e < t).count();
    let far = 100.0 * false_accepts as f64 / impostor.len() as f64;
    let frr = 100.0 * false_rejects as f64 / genuine.len() as f64;
    ErrorReport {
        far,
        frr,
        acc: 100.0 - (far + frr) / 2.0,
        d_prime: d,
        threshold,
    }
}

fn as_f64(v: &[usize]) -> Vec<f64> {
    v.iter().map(|&e| e as f64).collect()
}

/// FAR, FRR, ACC at `threshold` and d' over the raw match counts.
pub fn compute_error_measures(scores: &[ComparisonScore], threshold: u32) -> Result<ErrorReport> {
    if threshold == 0 {
        return Err(Error::InvalidConfig("threshold must be at least 1".into()));
    }
    let (genuine, impostor) = split(scores)?;
    let d = d_prime(&as_f64(&genuine), &as_f64(&impostor));
    Ok(report_for(&genuine, &impostor, threshold, d))
}

/// Error reports at every integer threshold from 1 to `max(eta) + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<ErrorReport>,
}

impl Sweep {
    /// `(threshold, ACC)` points.
    pub fn accuracy_curve(&self) -> Vec<(u32, f64)> {
        self.points.iter().map(|p| (p.threshold, p.acc)).collect()
    }

    /// `(FAR, 100 - FRR)` points in threshold order.
    pub fn roc(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.far, 100.0 - p.frr)).collect()
    }

    pub fn best_accuracy(&self) -> &ErrorReport {
        self.points
            .iter()
            .reduce(|best, p| if p.acc > best.acc { p } else { best })
            .expect("sweep has at least one point")
    }

    /// Threshold where `|FAR - FRR|` is smallest, lowest threshold on ties.
    pub fn equal_error_point(&self) -> &ErrorReport {
        self.points
            .iter()
            .reduce(|best, p| {
                if (p.far - p.frr).abs() < (best.far - best.frr).abs() {
                    p
                } else {
                    best
                }
            })
            .expect("sweep has at least one point")
    }
}

pub fn sweep_thresholds(scores: &[ComparisonScore]) -> Result<Sweep> {
    let (genuine, impostor) = split(scores)?;
    let d = d_prime(&as_f64(&genuine), &as_f64(&impostor));
    let max = genuine.iter().chain(&impostor).copied().max().unwrap_or(0);
    let points = (1..=max as u32 + 1)
        .map(|t| report_for(&genuine, &impostor, t, d))
        .collect();
    Ok(Sweep { points })
}

/// Equal-error operating threshold; see [`Sweep::equal_error_point`].
pub fn equal_error_threshold(scores: &[ComparisonScore]) -> Result<u32> {
    Ok(sweep_thresholds(scores)?.equal_error_point().threshold)
}

/// Genuine and impostor histograms over a shared range `[0, max(eta) + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub genuine: Vec<usize>,
    pub impostor: Vec<usize>,
}

pub fn score_histogram(scores: &[ComparisonScore], bins: usize) -> Result<ScoreHistogram> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let (genuine, impostor) = split(scores)?;
    let upper = genuine.iter().chain(&impostor).copied().max().unwrap_or(0) as f64 + 1.0;
    let width = upper / bins as f64;
    let edges = (0..=bins).map(|b| b as f64 * width).collect();
    let count = |values: &[usize]| {
        let mut out = vec![0usize; bins];
        for &v in values {
            let b = ((v as f64 / width).floor() as usize).min(bins - 1);
            out[b] += 1;
        }
        out
    };
    Ok(ScoreHistogram {
        edges,
        genuine: count(&genuine),
        impostor: count(&impostor),
    })
}
