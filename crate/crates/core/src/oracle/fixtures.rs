//! Fixture files: oracle outputs frozen to JSON so that `verify` measures
//! the sampler against previously computed ground truth instead of
//! silently regenerating it. Every fixture is stamped with the config hash
//! it was generated for; loading with a different hash is an error.

use super::quadrature::GibbsReference;
use super::spectral::SpectralSummary;
use crate::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};

/// `(gibbs.json, spectral.json)` for one `(potential, ε)` pair under the
/// fixture root: `<root>/<potential>/<eps>/`.
pub fn fixture_paths(root: &Path, potential_id: &str, eps: f64) -> (PathBuf, PathBuf) {
    let dir = root.join(potential_id).join(format!("{eps}"));
    (dir.join("gibbs.json"), dir.join("spectral.json"))
}

pub fn save_gibbs(root: &Path, reference: &GibbsReference) -> Result<PathBuf> {
    let (path, _) = fixture_paths(root, &reference.potential_id, reference.eps);
    fs::create_dir_all(path.parent().unwrap())?;
    fs::write(&path, serde_json::to_vec_pretty(reference)?)?;
    Ok(path)
}

pub fn save_spectral(root: &Path, summary: &SpectralSummary) -> Result<PathBuf> {
    let (_, path) = fixture_paths(root, &summary.potential_id, summary.eps);
    fs::create_dir_all(path.parent().unwrap())?;
    fs::write(&path, serde_json::to_vec_pretty(summary)?)?;
    Ok(path)
}

pub fn load_gibbs(
    root: &Path,
    potential_id: &str,
    eps: f64,
    expected_hash: &str,
) -> Result<GibbsReference> {
    let (path, _) = fixture_paths(root, potential_id, eps);
    let reference: GibbsReference = serde_json::from_slice(&fs::read(&path)?)?;
    check_hash(&path, &reference.config_hash, expected_hash)?;
    Ok(reference)
}

pub fn load_spectral(
    root: &Path,
    potential_id: &str,
    eps: f64,
    expected_hash: &str,
) -> Result<SpectralSummary> {
    let (_, path) = fixture_paths(root, potential_id, eps);
    let summary: SpectralSummary = serde_json::from_slice(&fs::read(&path)?)?;
    check_hash(&path, &summary.config_hash, expected_hash)?;
    Ok(summary)
}

fn check_hash(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::FixtureHashMismatch {
            path: path.display().to_string(),
            found: found.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gibbs_reference;
    use crate::potential::{landscape_summary, Potential};

    #[test]
    fn roundtrip_and_hash_guard() {
        let dir = std::env::temp_dir().join(format!("asmc-fixture-{}", std::process::id()));
        let pot = Potential::quartic();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let gr = gibbs_reference(&pot, 0.25, &ls, "hash-a").unwrap();
        save_gibbs(&dir, &gr).unwrap();
        let loaded = load_gibbs(&dir, "quartic", 0.25, "hash-a").unwrap();
        assert_eq!(loaded.well_masses, gr.well_masses);
        assert!(matches!(
            load_gibbs(&dir, "quartic", 0.25, "hash-b"),
            Err(Error::FixtureHashMismatch { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
