//! Content-addressed keypoint cache.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::SiftParams;
use crate::error::{Error, Result};
use crate::keypoint::KeypointSet;

/// Where cached keypoint sets live.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CacheLocation {
    /// Always detect.
    Disabled,
    /// `.strata-cache/` beside each image.
    #[default]
    BesideImages,
    /// One shared directory.
    Dir(PathBuf),
}

/// Hex SHA-256 over image bytes, radius and detector parameters.
pub fn cache_key(image_bytes: &[u8], radius: u32, params: &SiftParams) -> Result<String> {
    let mut h = Sha256::new();
    h.update(image_bytes);
    h.update(radius.to_le_bytes());
    h.update(serde_json::to_vec(params)?);
    Ok(hex::encode(h.finalize()))
}

impl CacheLocation {
    pub fn path_for(&self, image_path: &Path, key: &str) -> Option<PathBuf> {
        let file = format!("{key}.json");
        match self {
            CacheLocation::Disabled => None,
            CacheLocation::BesideImages => Some(
                image_path
                    .parent()
                    .unwrap_or(Path::new("."))
                    .join(".strata-cache")
                    .join(file),
            ),
            CacheLocation::Dir(dir) => Some(dir.join(file)),
        }
    }
}

/// Returns the cached set if present and readable.
pub fn load_cached(path: &Path, source_image_id: &str) -> Option<KeypointSet> {
    let text = std::fs::read_to_string(path).ok()?;
    match KeypointSet::from_json(&text, source_image_id) {
        Ok(set) => Some(set),
        Err(e) => {
            log::warn!("ignoring bad cache entry {}: {e}", path.display());
            None
        }
    }
}

/// Writes via a temporary file so concurrent readers never see a partial entry.
pub fn store_cached(path: &Path, set: &KeypointSet) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, set.to_json()?).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
