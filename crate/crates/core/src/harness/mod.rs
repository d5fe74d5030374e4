//! Dataset manifests, synthetic data with known transforms, and batch
//! experiments that turn a manifest into scores, reports and plots.

mod cache;
mod experiment;
mod ingest;
mod manifest;
mod synth;

pub use cache::{cache_key, load_cached, store_cached, CacheLocation};
pub use experiment::{
    run_experiment, write_experiment, ExperimentOptions, ExperimentOutput, Failure, RunMetadata,
    ThresholdReports,
};
pub use ingest::{ingest, Layout};
pub use manifest::{
    ComparisonPair, DatasetManifest, GenuinePolicy, GroundTruth, ImpostorPolicy, Protocol, Sample,
};
pub use synth::{
    generate_synthetic, map_point, SubjectTexture, SyntheticGenerator, SyntheticInstance,
    TransformSpec,
};
