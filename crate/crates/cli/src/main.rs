//! `strata`: detect keypoints, match iris images, generate synthetic data and
//! evaluate datasets from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stratasift::eval::{
    accuracy_svg, histogram_svg, read_scores, roc_svg, score_histogram, sweep_thresholds,
    write_curves, ScoreRecord, StratumLevel, ACC_CONVENTION,
};
use stratasift::harness::{
    generate_synthetic, ingest, run_experiment, write_experiment, CacheLocation, DatasetManifest,
    ExperimentOptions, ImpostorPolicy, Layout, Protocol, TransformSpec,
};
use stratasift::image::image_dimensions;
use stratasift::{
    load_image, match_keypoints, DimensionPolicy, Error, KeypointSet, PipelineConfig, Result,
    SiftParams,
};

const CACHE_ENV: &str = "STRATA_CACHE_DIR";

#[derive(Parser)]
#[command(name = "strata", version, about = "Stratified SIFT matching for localized iris images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect keypoints in one image.
    Detect {
        image: PathBuf,
        /// Iris radius; defaults to half the image width.
        #[arg(long)]
        radius: Option<u32>,
        /// Write the keypoint JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Match a gallery against a probe (images or keypoint JSON files).
    Match {
        gallery: PathBuf,
        probe: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the per-pair diagnostic dump here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        gallery_radius: Option<u32>,
        #[arg(long)]
        probe_radius: Option<u32>,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Generate a synthetic dataset with known rotations and scales.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        subjects: usize,
        #[arg(long)]
        instances: usize,
        #[arg(long)]
        out: PathBuf,
        /// Transform ranges as JSON.
        #[arg(long)]
        transforms: Option<PathBuf>,
    },
    /// Build a manifest from images on disk.
    Ingest {
        root: PathBuf,
        /// Manifest output path.
        #[arg(long)]
        out: PathBuf,
        /// CSV index (relative to the root) instead of subject folders.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Radius for samples without one of their own.
        #[arg(long)]
        radius: Option<u32>,
        /// Compare every cross-subject pair instead of sampling impostors.
        #[arg(long)]
        all_impostors: bool,
        #[arg(long, default_value_t = 0)]
        impostor_seed: u64,
    },
    /// Score every protocol pair of a manifest and write reports.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "3", value_parser = parse_stratum)]
        stratum: StratumLevel,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Skip the keypoint cache.
        #[arg(long)]
        no_cache: bool,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Threshold sweep over an existing score CSV.
    Sweep {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "3", value_parser = parse_stratum)]
        stratum: StratumLevel,
        #[arg(long, default_value_t = 20)]
        histogram_bins: usize,
    },
}

#[derive(Args)]
struct InputOpts {
    /// Detector parameters as JSON.
    #[arg(long)]
    sift: Option<PathBuf>,
    /// Center-crop oversized images instead of rejecting them.
    #[arg(long)]
    crop: bool,
}

impl InputOpts {
    fn sift_params(&self) -> Result<SiftParams> {
        let params = match &self.sift {
            Some(path) => serde_json::from_str(&read_text(path)?)?,
            None => SiftParams::default(),
        };
        Ok(params)
    }

    fn policy(&self) -> DimensionPolicy {
        if self.crop {
            DimensionPolicy::CenterCrop
        } else {
            DimensionPolicy::Strict
        }
    }
}

fn parse_stratum(s: &str) -> std::result::Result<StratumLevel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn default_radius(path: &Path) -> Result<u32> {
    let (w, _) = image_dimensions(path)?;
    Ok(w / 2)
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Keypoints and radius for one side of a comparison.
fn keypoints_for(path: &Path, radius: Option<u32>, input: &InputOpts) -> Result<(KeypointSet, u32)> {
    if is_json(path) {
        let radius = radius.ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{} holds keypoints; its radius must be given",
                path.display()
            ))
        })?;
        let set = KeypointSet::from_json(&read_text(path)?, stem(path))?;
        return Ok((set, radius));
    }
    let radius = match radius {
        Some(r) => r,
        None => default_radius(path)?,
    };
    let image = load_image(path, radius, input.policy())?;
    let set = stratasift::sift::detect(&image, &input.sift_params()?)?;
    Ok((set, radius))
}

fn cache_location(no_cache: bool) -> CacheLocation {
    if no_cache {
        return CacheLocation::Disabled;
    }
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => CacheLocation::Dir(dir.into()),
        _ => CacheLocation::BesideImages,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            image,
            radius,
            out,
            input,
        } => {
            let (set, _) = keypoints_for(&image, radius, &input)?;
            match out {
                Some(path) => {
                    set.save(&path)?;
                    println!(
                        "{}",
                        json!({ "keypoints": set.cardinality(), "out": path })
                    );
                }
                None => println!("{}", set.to_json()?),
            }
        }
        Command::Match {
            gallery,
            probe,
            config,
            dump,
            gallery_radius,
            probe_radius,
            input,
        } => {
            let config = load_config(config.as_deref())?;
            let (g, rg) = keypoints_for(&gallery, gallery_radius, &input)?;
            let (p, rp) = keypoints_for(&probe, probe_radius, &input)?;
            let result = match_keypoints(&g, f64::from(rg), &p, f64::from(rp), &config)?;
            if let Some(path) = dump {
                write_text(&path, &result.diagnostics(&g, &p, &config).to_json_pretty()?)?;
            }
            println!(
                "{}",
                json!({
                    "gallery": g.source_image_id,
                    "probe": p.source_image_id,
                    "eta": result.etas(),
                    "peak_center": result.histogram.as_ref().map(|h| h.peak_center),
                    "verdict": result.verdict,
                    "sf": result.sf,
                })
            );
        }
        Command::Synth {
            seed,
            subjects,
            instances,
            out,
            transforms,
        } => {
            let spec: TransformSpec = match transforms {
                Some(path) => serde_json::from_str(&read_text(&path)?)?,
                None => TransformSpec::default(),
            };
            let manifest = generate_synthetic(&out, seed, subjects, instances, &spec)?;
            println!(
                "{}",
                json!({
                    "samples": manifest.samples.len(),
                    "manifest": out.join("manifest.json"),
                })
            );
        }
        Command::Ingest {
            root,
            out,
            index,
            radius,
            all_impostors,
            impostor_seed,
        } => {
            let layout = match index {
                Some(file) => Layout::CsvIndex { file, radius },
                None => Layout::SubjectFolders { radius },
            };
            let protocol = Protocol {
                impostor: if all_impostors {
                    ImpostorPolicy::AllPairs
                } else {
                    ImpostorPolicy::OnePerOtherSubject {
                        seed: impostor_seed,
                    }
                },
                ..Protocol::default()
            };
            let manifest = ingest(&root, &layout, protocol)?;
            manifest.save(&out)?;
            println!(
                "{}",
                json!({ "samples": manifest.samples.len(), "pairs": manifest.pairs().len() })
            );
        }
        Command::Eval {
            manifest,
            stratum,
            out,
            config,
            workers,
            no_cache,
            input,
        } => {
            let data = DatasetManifest::load(&manifest)?;
            let options = ExperimentOptions {
                config: load_config(config.as_deref())?,
                sift: input.sift_params()?,
                stratum,
                workers,
                cache: cache_location(no_cache),
                dimension_policy: input.policy(),
                ..ExperimentOptions::default()
            };
            let output = run_experiment(&data, &options)?;
            write_experiment(&out, &output, options.histogram_bins)?;
            for f in &output.metadata.failures {
                log::warn!("{}", serde_json::to_string(f)?);
            }
            println!(
                "{}",
                json!({
                    "stratum": stratum.number(),
                    "comparisons": output.metadata.comparisons,
                    "failures": output.metadata.failures.len(),
                    "configured": output.reports.configured,
                    "equal_error": output.reports.equal_error,
                })
            );
        }
        Command::Sweep {
            scores,
            out,
            stratum,
            histogram_bins,
        } => {
            let records = read_scores(&scores)?;
            let scores = ScoreRecord::scores(&records, stratum);
            let sweep = sweep_thresholds(&scores)?;
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            write_curves(&out, &sweep)?;
            write_text(&out.join("roc.svg"), &roc_svg(&sweep))?;
            write_text(&out.join("accuracy.svg"), &accuracy_svg(&sweep))?;
            let hist = score_histogram(&scores, histogram_bins)?;
            write_text(&out.join("histogram.svg"), &histogram_svg(&hist))?;
            let report = json!({
                "stratum": stratum.number(),
                "acc_convention": ACC_CONVENTION,
                "equal_error": sweep.equal_error_point(),
                "best_accuracy": sweep.best_accuracy(),
            });
            write_text(
                &out.join("report.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
            println!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string(), "kind": e.kind() }));
            ExitCode::FAILURE
        }
    }
}
