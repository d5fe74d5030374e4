use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

use super::manifest::{DatasetManifest, Protocol, Sample};

/// How samples are laid out under a dataset root.
#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// `root/<subject>/<instance>.{png,pgm}`. A sidecar `<instance>.json`
    /// holding `{"radius": N}` overrides `radius`.
    SubjectFolders { radius: Option<u32> },
    /// CSV with header `subject_id,instance_id,path[,radius]`; paths relative
    /// to the root. An empty radius cell falls back to `radius`.
    CsvIndex { file: PathBuf, radius: Option<u32> },
}

#[derive(Deserialize)]
struct Sidecar {
    radius: u32,
}

#[derive(Deserialize)]
struct IndexRow {
    subject_id: String,
    instance_id: String,
    path: PathBuf,
    #[serde(default)]
    radius: Option<u32>,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "pgm")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Scans a dataset root and builds a validated manifest.
pub fn ingest(root: &Path, layout: &Layout, protocol: Protocol) -> Result<DatasetManifest> {
    let samples = match layout {
        Layout::SubjectFolders { radius } => scan_folders(root, *radius)?,
        Layout::CsvIndex { file, radius } => read_index(root, file, *radius)?,
    };
    if samples.is_empty() {
        return Err(Error::NoSamples(root.to_path_buf()));
    }
    let manifest = DatasetManifest {
        root: root.to_path_buf(),
        samples,
        protocol,
    };
    manifest.validate()?;
    Ok(manifest)
}

fn scan_folders(root: &Path, radius: Option<u32>) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for subject_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let subject_id = subject_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if subject_id.starts_with('.') {
            continue;
        }
        let images: Vec<PathBuf> = sorted_entries(&subject_dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        if images.is_empty() {
            return Err(Error::Manifest(format!(
                "subject {subject_id} has zero instances"
            )));
        }
        for image in images {
            let stem = image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let sidecar = image.with_extension("json");
            let radius = if sidecar.is_file() {
                let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
                let meta: Sidecar = serde_json::from_str(&text).map_err(|e| {
                    Error::Manifest(format!("unreadable metadata {}: {e}", sidecar.display()))
                })?;
                meta.radius
            } else {
                radius.ok_or_else(|| {
                    Error::Manifest(format!(
                        "no radius for {}: add {} or pass a global radius",
                        image.display(),
                        sidecar.display()
                    ))
                })?
            };
            let rel = image.strip_prefix(root).unwrap_or(&image).to_path_buf();
            samples.push(Sample {
                subject_id: subject_id.clone(),
                instance_id: stem,
                path: rel,
                radius,
                ground_truth: None,
            });
        }
    }
    Ok(samples)
}

fn read_index(root: &Path, file: &Path, radius: Option<u32>) -> Result<Vec<Sample>> {
    let index = if file.is_absolute() {
        file.to_path_buf()
    } else {
        root.join(file)
    };
    let mut reader = csv::Reader::from_path(&index)?;
    let mut samples = Vec::new();
    for (k, row) in reader.deserialize::<IndexRow>().enumerate() {
        // header is line 1
        let line = k + 2;
        let row = row.map_err(|e| Error::IndexRow {
            row: line,
            message: e.to_string(),
        })?;
        let path = root.join(&row.path);
        if !path.is_file() {
            return Err(Error::IndexRow {
                row: line,
                message: format!("missing file {}", path.display()),
            });
        }
        let radius = row.radius.or(radius).ok_or_else(|| Error::IndexRow {
            row: line,
            message: "no radius given and no global radius".into(),
        })?;
        samples.push(Sample {
            subject_id: row.subject_id,
            instance_id: row.instance_id,
            path: row.path,
            radius,
            ground_truth: None,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Label;
    use crate::image::Raster;

    fn write_png(path: &Path) {
        Raster::filled(32, 32, 0.5).save(path).unwrap();
    }

    #[test]
    fn subject_folders_three_by_two() {
        let dir = tempfile::tempdir().unwrap();
        for s in ["a", "b", "c"] {
            std::fs::create_dir(dir.path().join(s)).unwrap();
            for i in 0..2 {
                write_png(&dir.path().join(s).join(format!("{i}.png")));
            }
        }
        std::fs::write(dir.path().join("b/1.json"), r#"{"radius": 16}"#).unwrap();
        let m = ingest(
            dir.path(),
            &Layout::SubjectFolders { radius: Some(16) },
            Protocol::default(),
        )
        .unwrap();
        assert_eq!(m.samples.len(), 6);
        let pairs = m.pairs();
        assert_eq!(pairs.iter().filter(|p| p.label == Label::Genuine).count(), 3);
        assert!(pairs.iter().filter(|p| p.label == Label::Impostor).count() <= 12);
    }

    #[test]
    fn missing_radius_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        write_png(&dir.path().join("a/0.png"));
        let err = ingest(
            dir.path(),
            &Layout::SubjectFolders { radius: None },
            Protocol::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("no radius"));
    }

    #[test]
    fn bad_sidecar_is_unreadable_metadata() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        write_png(&dir.path().join("a/0.png"));
        std::fs::write(dir.path().join("a/0.json"), "{oops").unwrap();
        let err = ingest(
            dir.path(),
            &Layout::SubjectFolders { radius: Some(16) },
            Protocol::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("unreadable metadata"));
    }

    #[test]
    fn empty_directory_has_no_samples() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest(
            dir.path(),
            &Layout::SubjectFolders { radius: Some(16) },
            Protocol::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoSamples(_)));
        assert!(err.to_string().contains("no samples"));
    }

    #[test]
    fn subject_without_images_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        let err = ingest(
            dir.path(),
            &Layout::SubjectFolders { radius: Some(16) },
            Protocol::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("zero instances"));
    }

    #[test]
    fn csv_index_names_bad_row() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join("x.png"));
        std::fs::write(
            dir.path().join("index.csv"),
            "subject_id,instance_id,path,radius\ns1,0,x.png,16\ns1,1,missing.png,16\n",
        )
        .unwrap();
        let err = ingest(
            dir.path(),
            &Layout::CsvIndex {
                file: "index.csv".into(),
                radius: None,
            },
            Protocol::default(),
        )
        .unwrap_err();
        match err {
            Error::IndexRow { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("missing.png"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_index_with_global_radius() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join("x.png"));
        write_png(&dir.path().join("y.png"));
        std::fs::write(
            dir.path().join("index.csv"),
            "subject_id,instance_id,path,radius\ns1,0,x.png,\ns2,0,y.png,16\n",
        )
        .unwrap();
        let m = ingest(
            dir.path(),
            &Layout::CsvIndex {
                file: "index.csv".into(),
                radius: Some(16),
            },
            Protocol::default(),
        )
        .unwrap();
        assert_eq!(m.samples.len(), 2);
        assert!(m.samples.iter().all(|s| s.radius == 16));
    }
}
