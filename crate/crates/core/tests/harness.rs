use std::collections::HashMap;
use std::path::Path;

use stratasift::eval::{read_scores, Label, StratumLevel};
use stratasift::harness::{
    generate_synthetic, run_experiment, write_experiment, CacheLocation, DatasetManifest,
    ExperimentOptions, TransformSpec,
};
use stratasift::{load_image, DimensionPolicy, Error};

fn small_spec() -> TransformSpec {
    TransformSpec {
        base_radius: 32,
        ..TransformSpec::default()
    }
}

fn options(cache: CacheLocation) -> ExperimentOptions {
    ExperimentOptions {
        cache,
        workers: Some(2),
        ..ExperimentOptions::default()
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synthetic_generation_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = TransformSpec::default();
    let ma = generate_synthetic(a.path(), 42, 5, 3, &spec).unwrap();
    generate_synthetic(b.path(), 42, 5, 3, &spec).unwrap();
    assert_eq!(ma.samples.len(), 15);
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), 16);
    assert_eq!(fa, fb);

    for s in &ma.samples {
        let gt = s.ground_truth.unwrap();
        assert!((0.0..360.0).contains(&gt.rotation_deg));
        assert!((0.8..=1.2).contains(&gt.scale));
    }
}

#[test]
fn identity_instance_is_the_base_render() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(dir.path(), 42, 2, 2, &TransformSpec::default()).unwrap();
    let generator =
        stratasift::harness::SyntheticGenerator::new(42, TransformSpec::default()).unwrap();
    for subject in 0..2 {
        let sample = &manifest.samples[2 * subject];
        let gt = sample.ground_truth.unwrap();
        assert_eq!((gt.rotation_deg, gt.scale), (0.0, 1.0));
        let loaded = load_image(&manifest.resolve(sample), sample.radius, DimensionPolicy::Strict)
            .unwrap();
        let base = generator.texture(subject).render(64, 0.0);
        assert_eq!(loaded.raster().to_luma8(), base.to_luma8());
    }
}

#[test]
fn saved_manifest_reloads_relative_to_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    let generated = generate_synthetic(dir.path(), 3, 2, 2, &small_spec()).unwrap();
    let loaded = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(loaded.samples, generated.samples);
    for s in &loaded.samples {
        assert!(loaded.resolve(s).exists());
    }
}

#[test]
fn single_subject_needs_both_classes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(dir.path(), 5, 1, 3, &small_spec()).unwrap();
    let err = run_experiment(&manifest, &options(CacheLocation::Disabled)).unwrap_err();
    assert!(matches!(err, Error::BothClassesRequired), "{err}");
}

#[test]
fn cached_and_fresh_runs_agree() {
    let data = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(data.path(), 9, 4, 3, &small_spec()).unwrap();

    let fresh = run_experiment(&manifest, &options(CacheLocation::Disabled)).unwrap();
    let cold = run_experiment(&manifest, &options(CacheLocation::Dir(cache.path().into()))).unwrap();
    let entries = std::fs::read_dir(cache.path()).unwrap().count();
    assert_eq!(entries, manifest.samples.len());
    let warm = run_experiment(&manifest, &options(CacheLocation::Dir(cache.path().into()))).unwrap();

    assert_eq!(fresh.records, cold.records);
    assert_eq!(fresh.records, warm.records);
    assert_eq!(fresh.reports, warm.reports);
    assert_eq!(fresh.metadata, warm.metadata);
}

#[test]
fn beside_images_cache_lives_next_to_the_samples() {
    let data = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(data.path(), 10, 2, 2, &small_spec()).unwrap();
    let a = run_experiment(&manifest, &options(CacheLocation::BesideImages)).unwrap();
    let cache_dir = data.path().join(".strata-cache");
    assert_eq!(std::fs::read_dir(&cache_dir).unwrap().count(), 4);
    let b = run_experiment(&manifest, &options(CacheLocation::BesideImages)).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn repeated_runs_write_identical_scores() {
    let data = tempfile::tempdir().unwrap();
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(data.path(), 12, 4, 2, &small_spec()).unwrap();
    for (out, workers) in [(&out_a, 1), (&out_b, 4)] {
        let opts = ExperimentOptions {
            workers: Some(workers),
            ..options(CacheLocation::Disabled)
        };
        let output = run_experiment(&manifest, &opts).unwrap();
        let written = write_experiment(out.path(), &output, 10).unwrap();
        for name in ["scores.csv", "report.json", "run.json", "roc.svg", "sweep.csv"] {
            assert!(written.contains(&out.path().join(name)), "{name}");
        }
    }
    let (a, b) = (read_all(out_a.path()), read_all(out_b.path()));
    assert_eq!(a, b);

    let records = read_scores(&out_a.path().join("scores.csv")).unwrap();
    assert!(records.iter().any(|r| r.label == Label::Genuine));
    assert!(records.iter().any(|r| r.label == Label::Impostor));
    for r in &records {
        assert!(r.eta(StratumLevel::III) <= r.eta(StratumLevel::II));
        assert!(r.eta(StratumLevel::II) <= r.eta(StratumLevel::I));
    }
}

#[test]
fn broken_sample_is_recorded_and_isolated() {
    let data = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic(data.path(), 14, 3, 3, &small_spec()).unwrap();
    let clean = run_experiment(&manifest, &options(CacheLocation::Disabled)).unwrap();

    let victim = manifest.samples[4].clone();
    std::fs::write(manifest.resolve(&victim), b"not an image").unwrap();
    let broken = run_experiment(&manifest, &options(CacheLocation::Disabled)).unwrap();

    let victim_id = victim.id();
    assert!(broken
        .metadata
        .failures
        .iter()
        .any(|f| f.sample_id.as_deref() == Some(victim_id.as_str())));
    assert!(broken.metadata.failures.iter().any(|f| {
        f.gallery_id.as_deref() == Some(victim_id.as_str())
            || f.probe_id.as_deref() == Some(victim_id.as_str())
    }));
    assert_ne!(clean.metadata.input_hash, broken.metadata.input_hash);

    let before: HashMap<_, _> = clean
        .records
        .iter()
        .map(|r| ((r.gallery_id.clone(), r.probe_id.clone()), r.clone()))
        .collect();
    let untouched: Vec<_> = broken.records.iter().collect();
    assert!(!untouched.is_empty());
    for r in untouched {
        assert_ne!(r.gallery_id, victim_id);
        assert_ne!(r.probe_id, victim_id);
        assert_eq!(&before[&(r.gallery_id.clone(), r.probe_id.clone())], r);
    }
    assert_eq!(
        broken.records.len() + broken.metadata.failures.len() - 1,
        clean.records.len()
    );
}
