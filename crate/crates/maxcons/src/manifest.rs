//! Writing scenario outputs and the manifest that reproduces them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Scenario, ScenarioConfig};
use crate::experiments::{run_scenario, summary_csv, Artifact};
use crate::io::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub version: String,
    /// Initialization seed; every other seed is part of `config`.
    pub seed: u64,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    /// SHA-256 of every written CSV, by file name.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Hash of the canonical (compact JSON) form of a config.
pub fn config_hash(cfg: &ScenarioConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

/// Runs a scenario and writes its CSVs, `summary.csv` and the manifest into
/// `out`.
pub fn execute(scenario: Scenario, cfg: &ScenarioConfig, out: &Path) -> Result<Manifest> {
    let cfg = cfg.resolved(scenario);
    let output = run_scenario(scenario, &cfg)?;
    let mut artifacts = output.artifacts;
    artifacts.push(Artifact {
        name: SUMMARY_FILE.into(),
        bytes: summary_csv(scenario, &output.summary).into_bytes(),
    });
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = BTreeMap::new();
    for a in &artifacts {
        let path = out.join(&a.name);
        write_atomic(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        files.insert(a.name.clone(), sha256_hex(&a.bytes));
    }
    let manifest = Manifest {
        scenario,
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.init_seed,
        config_sha256: config_hash(&cfg)?,
        config: cfg,
        files,
    };
    write_atomic(
        &out.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).context("parsing manifest")?;
    ensure!(
        config_hash(&manifest.config)? == manifest.config_sha256,
        "manifest config does not match its recorded hash"
    );
    Ok(manifest)
}

/// Files whose hash differs between two manifests, including files present
/// in only one of them.
pub fn mismatched_files(expected: &Manifest, actual: &Manifest) -> Vec<String> {
    let mut names: Vec<&String> = expected.files.keys().chain(actual.files.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| expected.files.get(*n) != actual.files.get(*n))
        .cloned()
        .collect()
}

/// Re-executes the scenario recorded in a manifest into `out` and fails
/// unless every CSV reproduces byte-for-byte.
pub fn rerun(manifest_path: &Path, out: &Path) -> Result<Manifest> {
    let expected = read_manifest(manifest_path)?;
    let actual = execute(expected.scenario, &expected.config, out)?;
    let bad = mismatched_files(&expected, &actual);
    ensure!(
        bad.is_empty(),
        "outputs differ from the manifest: {}",
        bad.join(", ")
    );
    Ok(actual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
