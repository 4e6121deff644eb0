//! Run manifests: a content-addressed record of what a run produced.
//!
//! The configuration hash is taken over the canonical re-serialization of
//! the parsed scenario, so formatting, comments, key order, and explicitly
//! spelling out a default all hash identically, while any semantic change
//! (a different seed, one more scatterer) changes the hash.

use crate::scenario::ScenarioFile;
use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Hex SHA-256 of the scenario's canonical form.
pub fn config_hash(scenario: &ScenarioFile) -> anyhow::Result<String> {
    let canonical = scenario.canonical_toml()?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Hex SHA-256 of a file's bytes, plus its length.
pub fn hash_file(path: &Path) -> anyhow::Result<(String, u64)> {
    let bytes =
        std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// One produced file, addressed relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// The `manifest.json` written at the end of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunManifest {
    pub scene_id: String,
    pub config_hash: String,
    pub tool_version: String,
    /// Wall-clock creation time, seconds since the Unix epoch.
    pub created_utc: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    pub fn new(scene_id: &str, config_hash: String) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            artifacts: Vec::new(),
        }
    }

    /// Hash `path` (already written under `run_dir`) and record it.
    pub fn record(&mut self, run_dir: &Path, path: &Path) -> anyhow::Result<()> {
        let (sha256, bytes) = hash_file(path)?;
        let rel = path
            .strip_prefix(run_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.artifacts.push(ArtifactEntry {
            path: rel,
            sha256,
            bytes,
        });
        Ok(())
    }

    /// Every artifact path must be unique within the run.
    pub fn validate(&self) -> anyhow::Result<()> {
        let mut seen = HashSet::new();
        for a in &self.artifacts {
            if !seen.insert(a.path.as_str()) {
                anyhow::bail!("manifest lists {} twice", a.path);
            }
        }
        Ok(())
    }

    /// Write `manifest.json` into the run directory and return its path.
    pub fn write(&self, run_dir: &Path) -> anyhow::Result<std::path::PathBuf> {
        self.validate()?;
        let path = run_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    #[cfg(test)]
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        manifest.validate()?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> ScenarioFile {
        ScenarioFile::load("single-target").unwrap()
    }

    #[test]
    fn hash_is_semantic_not_textual() {
        let text = include_str!("../presets/single-target.toml");
        let a = config_hash(&scenario()).unwrap();
        let reformatted = format!("# leading comment\n\n{}", text.replace(" = ", "   =   "));
        let b = config_hash(&ScenarioFile::from_toml(&reformatted).unwrap()).unwrap();
        assert_eq!(a, b);
        let changed =
            ScenarioFile::from_toml(&text.replace("root-seed = 1", "root-seed = 2")).unwrap();
        assert_ne!(a, config_hash(&changed).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn manifest_round_trips_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("results.csv");
        std::fs::write(&file, b"scene_id\n").unwrap();

        let mut m = RunManifest::new("unit", "ab".repeat(32));
        m.record(dir.path(), &file).unwrap();
        let path = m.write(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.artifacts[0].path, "results.csv");
        assert_eq!(back.artifacts[0].bytes, 9);

        m.record(dir.path(), &file).unwrap();
        assert!(m.write(dir.path()).is_err());
    }
}
