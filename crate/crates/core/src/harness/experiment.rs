//! Batch evaluation over a dataset manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, SiftParams};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_svg, compute_error_measures, histogram_svg, roc_svg, score_histogram,
    sweep_thresholds, write_curves, write_scores, ErrorReport, Label, ScoreRecord, StratumLevel,
    ACC_CONVENTION,
};
use crate::image::{decode_image, DimensionPolicy};
use crate::keypoint::KeypointSet;
use crate::matching::match_keypoints;

use super::cache::{cache_key, load_cached, store_cached, CacheLocation};
use super::manifest::DatasetManifest;

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub config: PipelineConfig,
    pub sift: SiftParams,
    pub stratum: StratumLevel,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    pub cache: CacheLocation,
    pub dimension_policy: DimensionPolicy,
    pub histogram_bins: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            config: PipelineConfig::default(),
            sift: SiftParams::default(),
            stratum: StratumLevel::III,
            workers: None,
            cache: CacheLocation::default(),
            dimension_policy: DimensionPolicy::default(),
            histogram_bins: 20,
        }
    }
}

/// A sample or comparison that could not be processed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub gallery_id: Option<String>,
    pub probe_id: Option<String>,
    pub sample_id: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReports {
    /// At the configured decision threshold.
    pub configured: ErrorReport,
    pub equal_error: ErrorReport,
    pub best_accuracy: ErrorReport,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: PipelineConfig,
    pub sift: SiftParams,
    pub stratum: u8,
    pub protocol: super::manifest::Protocol,
    /// SHA-256 over every sample's id, radius and image bytes, in manifest order.
    pub input_hash: String,
    pub samples: usize,
    pub comparisons: usize,
    pub failures: Vec<Failure>,
    pub acc_convention: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ScoreRecord>,
    pub reports: ThresholdReports,
    pub metadata: RunMetadata,
}

struct LoadedSample {
    keypoints: KeypointSet,
    radius: u32,
}

fn load_sample(
    manifest: &DatasetManifest,
    index: usize,
    options: &ExperimentOptions,
) -> Result<(Vec<u8>, LoadedSample)> {
    let sample = &manifest.samples[index];
    let path = manifest.resolve(sample);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let key = cache_key(&bytes, sample.radius, &options.sift)?;
    let cached = options.cache.path_for(&path, &key);
    if let Some(set) = cached.as_deref().and_then(|p| load_cached(p, &sample.id())) {
        return Ok((
            bytes,
            LoadedSample {
                keypoints: set,
                radius: sample.radius,
            },
        ));
    }
    let image = decode_image(&bytes, sample.radius, options.dimension_policy, sample.id())?;
    let set = crate::sift::detect(&image, &options.sift)?;
    if let Some(p) = cached {
        if let Err(e) = store_cached(&p, &set) {
            log::warn!("cannot cache keypoints for {}: {e}", sample.id());
        }
    }
    Ok((
        bytes,
        LoadedSample {
            keypoints: set,
            radius: image.radius(),
        },
    ))
}

fn input_hash(manifest: &DatasetManifest, bytes: &[Option<Vec<u8>>]) -> String {
    let mut h = Sha256::new();
    for (sample, b) in manifest.samples.iter().zip(bytes) {
        h.update(sample.id().as_bytes());
        h.update([0]);
        h.update(sample.radius.to_le_bytes());
        if let Some(b) = b {
            h.update((b.len() as u64).to_le_bytes());
            h.update(b);
        }
    }
    hex::encode(h.finalize())
}

/// Detects keypoints, matches every protocol pair and scores all strata.
/// Failing samples and pairs are recorded in the metadata and left out of
/// the scores.
pub fn run_experiment(manifest: &DatasetManifest, options: &ExperimentOptions) -> Result<ExperimentOutput> {
    options.config.validate()?;
    options.sift.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let loaded: Vec<Result<(Vec<u8>, LoadedSample)>> = pool.install(|| {
        (0..manifest.samples.len())
            .into_par_iter()
            .map(|k| load_sample(manifest, k, options))
            .collect()
    });

    let mut failures = Vec::new();
    let mut bytes = Vec::with_capacity(loaded.len());
    let mut samples = Vec::with_capacity(loaded.len());
    for (k, item) in loaded.into_iter().enumerate() {
        match item {
            Ok((b, s)) => {
                bytes.push(Some(b));
                samples.push(Some(s));
            }
            Err(e) => {
                let id = manifest.samples[k].id();
                log::warn!("sample {id} failed: {e}");
                failures.push(Failure {
                    gallery_id: None,
                    probe_id: None,
                    sample_id: Some(id),
                    message: e.to_string(),
                });
                bytes.push(None);
                samples.push(None);
            }
        }
    }

    let pairs = manifest.pairs();
    let outcomes: Vec<std::result::Result<ScoreRecord, Failure>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                let gid = manifest.samples[pair.gallery].id();
                let pid = manifest.samples[pair.probe].id();
                let fail = |message: String| Failure {
                    gallery_id: Some(gid.clone()),
                    probe_id: Some(pid.clone()),
                    sample_id: None,
                    message,
                };
                let (Some(g), Some(p)) = (&samples[pair.gallery], &samples[pair.probe]) else {
                    return Err(fail("sample unavailable".into()));
                };
                let result = match_keypoints(
                    &g.keypoints,
                    f64::from(g.radius),
                    &p.keypoints,
                    f64::from(p.radius),
                    &options.config,
                )
                .map_err(|e| fail(e.to_string()))?;
                let etas = result.etas();
                Ok(ScoreRecord {
                    gallery_id: gid.clone(),
                    probe_id: pid.clone(),
                    label: pair.label,
                    eta_r: etas.r,
                    eta_rinter: etas.rinter,
                    eta_rnew: etas.rnew,
                })
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }

    let has = |l: Label| records.iter().any(|r| r.label == l);
    if !(has(Label::Genuine) && has(Label::Impostor)) {
        return Err(Error::BothClassesRequired);
    }
    let scores = ScoreRecord::scores(&records, options.stratum);
    let sweep = sweep_thresholds(&scores)?;
    let reports = ThresholdReports {
        configured: compute_error_measures(&scores, options.config.decision_threshold)?,
        equal_error: sweep.equal_error_point().clone(),
        best_accuracy: sweep.best_accuracy().clone(),
    };
    let metadata = RunMetadata {
        config: options.config.clone(),
        sift: options.sift.clone(),
        stratum: options.stratum.number(),
        protocol: manifest.protocol,
        input_hash: input_hash(manifest, &bytes),
        samples: manifest.samples.len(),
        comparisons: records.len(),
        failures,
        acc_convention: ACC_CONVENTION.to_string(),
    };
    Ok(ExperimentOutput {
        records,
        reports,
        metadata,
    })
}

#[derive(Serialize)]
struct ReportFile<'a> {
    stratum: u8,
    acc_convention: &'a str,
    #[serde(flatten)]
    reports: &'a ThresholdReports,
}

/// Writes `scores.csv`, `report.json`, `run.json`, the curve CSVs and SVG
/// plots into `dir`. Returns the written paths.
pub fn write_experiment(dir: &Path, output: &ExperimentOutput, histogram_bins: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stratum: StratumLevel = output.metadata.stratum.to_string().parse()?;
    let scores = ScoreRecord::scores(&output.records, stratum);
    let sweep = sweep_thresholds(&scores)?;
    let hist = score_histogram(&scores, histogram_bins)?;

    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put(
        "report.json",
        serde_json::to_string_pretty(&ReportFile {
            stratum: output.metadata.stratum,
            acc_convention: ACC_CONVENTION,
            reports: &output.reports,
        })?,
    )?;
    put("run.json", serde_json::to_string_pretty(&output.metadata)?)?;
    put("roc.svg", roc_svg(&sweep))?;
    put("accuracy.svg", accuracy_svg(&sweep))?;
    put("histogram.svg", histogram_svg(&hist))?;

    let scores_path = dir.join("scores.csv");
    write_scores(&scores_path, &output.records)?;
    written.push(scores_path);
    write_curves(dir, &sweep)?;
    written.extend(["sweep.csv", "accuracy.csv", "roc.csv"].map(|n| dir.join(n)));
    Ok(written)
}
