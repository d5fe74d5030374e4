use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ComparisonScore, Label, StratumLevel, Sweep};

/// One row of the score CSV: match counts after each stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub gallery_id: String,
    pub probe_id: String,
    pub label: Label,
    #[serde(rename = "eta_R")]
    pub eta_r: usize,
    #[serde(rename = "eta_Rinter")]
    pub eta_rinter: usize,
    #[serde(rename = "eta_Rnew")]
    pub eta_rnew: usize,
}

impl ScoreRecord {
    pub fn eta(&self, stratum: StratumLevel) -> usize {
        match stratum {
            StratumLevel::I => self.eta_r,
            StratumLevel::II => self.eta_rinter,
            StratumLevel::III => self.eta_rnew,
        }
    }

    pub fn score(&self, stratum: StratumLevel) -> ComparisonScore {
        ComparisonScore {
            gallery_id: self.gallery_id.clone(),
            probe_id: self.probe_id.clone(),
            eta_final: self.eta(stratum),
            label: self.label,
            stratum_used: stratum,
        }
    }

    pub fn scores(records: &[ScoreRecord], stratum: StratumLevel) -> Vec<ComparisonScore> {
        records.iter().map(|r| r.score(stratum)).collect()
    }
}

pub fn write_scores(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Writes `sweep.csv` (all measures), `accuracy.csv` and `roc.csv` into `dir`.
pub fn write_curves(dir: &Path, sweep: &Sweep) -> Result<()> {
    let mut all = csv::Writer::from_path(dir.join("sweep.csv"))?;
    all.write_record(["threshold", "far", "frr", "acc", "d_prime"])?;
    for p in &sweep.points {
        all.write_record([
            p.threshold.to_string(),
            p.far.to_string(),
            p.frr.to_string(),
            p.acc.to_string(),
            p.d_prime.to_string(),
        ])?;
    }
    all.flush().map_err(|e| Error::io(dir, e))?;

    let mut acc = csv::Writer::from_path(dir.join("accuracy.csv"))?;
    acc.write_record(["threshold", "acc"])?;
    for (t, a) in sweep.accuracy_curve() {
        acc.write_record([t.to_string(), a.to_string()])?;
    }
    acc.flush().map_err(|e| Error::io(dir, e))?;

    let mut roc = csv::Writer::from_path(dir.join("roc.csv"))?;
    roc.write_record(["threshold", "far", "gar"])?;
    for (p, (far, gar)) in sweep.points.iter().zip(sweep.roc()) {
        roc.write_record([p.threshold.to_string(), far.to_string(), gar.to_string()])?;
    }
    roc.flush().map_err(|e| Error::io(dir, e))
}
