//! Atomic file output and the on-disk similarity cache.

use std::io::Write;
use std::path::{Path, PathBuf};

use devrank_core::{RatingMatrix, SimilarityMatrix};

use crate::CliError;

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(dir.display().to_string(), e))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::io(path.display().to_string(), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(path.display().to_string(), e.error))?;
    Ok(())
}

/// Similarity matrices keyed by store digest, metric and scale range.
pub struct SimilarityCache {
    dir: PathBuf,
    digest: String,
    lo: f64,
    hi: f64,
}

impl SimilarityCache {
    pub fn new(dir: PathBuf, digest: &str, lo: f64, hi: f64) -> Self {
        SimilarityCache {
            dir,
            digest: digest.to_string(),
            lo,
            hi,
        }
    }

    fn path(&self, metric: &str) -> PathBuf {
        let short = &self.digest[..16.min(self.digest.len())];
        self.dir
            .join(format!("{short}-{metric}-{}-{}.csv", self.lo, self.hi))
    }

    /// Loads the cached matrix, or computes and stores it. Cache problems
    /// are logged and never fatal.
    pub fn get_or_compute(&self, ratings: &RatingMatrix) -> SimilarityMatrix {
        let path = self.path(ratings.source().name());
        if let Ok(file) = std::fs::File::open(&path) {
            match SimilarityMatrix::from_csv(ratings.universe().clone(), file) {
                Ok(sims) => {
                    log::debug!("similarity cache hit: {}", path.display());
                    return sims;
                }
                Err(e) => log::warn!("ignoring cache file {}: {e}", path.display()),
            }
        }
        let sims = SimilarityMatrix::from_ratings(ratings);
        if let Err(e) = write_atomic(&path, &sims.to_csv()) {
            log::warn!("could not write similarity cache: {e}");
        }
        sims
    }
}
