//! Run manifests: a provenance record emitted exactly once per successful
//! run.
//!
//! The manifest captures enough to reproduce the run — the command line, a
//! digest of every input payload, the tool version, and the effective RNG
//! seeds — plus timestamps and the list of files written. Timestamps are
//! the only non-reproducible fields, so reruns with equal digests and seeds
//! produce byte-identical result files and differ only inside the manifest.
//!
//! With a directory-valued `--out` the manifest lands in
//! `<out>/manifest.json`; otherwise it is one JSON line on stderr, keeping
//! stdout reserved for the command's payload.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

/// Seed used when a randomized command runs without an explicit `--seed`.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_digest: String,
    tool_version: String,
    seeds: Vec<u64>,
    started_at: String,
    finished_at: String,
    output_paths: Vec<String>,
}

/// Accumulates manifest fields over the lifetime of one run.
pub struct ManifestScope {
    command: String,
    hasher: Sha256,
    seeds: Vec<u64>,
    started_at: DateTime<Utc>,
    outputs: Vec<PathBuf>,
}

impl ManifestScope {
    /// Captures the invocation and the start time; inputs are hashed as
    /// commands read them.
    pub fn new() -> Self {
        ManifestScope {
            command: std::env::args().collect::<Vec<_>>().join(" "),
            hasher: Sha256::new(),
            seeds: vec![DEFAULT_SEED],
            started_at: Utc::now(),
            outputs: Vec::new(),
        }
    }

    /// Folds one input payload (config text, data file, ...) into the digest.
    pub fn add_input(&mut self, bytes: &[u8]) {
        self.hasher.update(bytes);
    }

    /// Overrides the recorded seed when the user supplied one.
    pub fn set_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
    }

    /// Records a file this run wrote.
    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Serializes the manifest. `out_dir` places it at
    /// `<out_dir>/manifest.json`; `None` emits a single stderr line.
    pub fn finish(self, out_dir: Option<&Path>) -> Result<(), Failure> {
        let mut output_paths: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        let manifest_path = out_dir.map(|d| d.join("manifest.json"));
        if let Some(path) = &manifest_path {
            output_paths.push(path.display().to_string());
        }
        let manifest = RunManifest {
            command: self.command,
            config_digest: hex_digest(self.hasher),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: self.seeds,
            started_at: rfc3339(self.started_at),
            finished_at: rfc3339(Utc::now()),
            output_paths,
        };
        match manifest_path {
            Some(path) => {
                let text = serde_json::to_string_pretty(&manifest)?;
                std::fs::write(&path, text + "\n")?;
            }
            None => eprintln!("{}", serde_json::to_string(&manifest)?),
        }
        Ok(())
    }
}

fn rfc3339(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Micros, true)
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
