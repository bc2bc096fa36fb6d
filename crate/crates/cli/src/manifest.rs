//! Run manifests: every output directory gets exactly one, recording the
//! command line, the effective configuration, the seed, and input digests.
//! Reruns with an identical manifest reproduce identical outputs.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub artifact_version: &'static str,
    pub command_line: String,
    pub seed: Option<u64>,
    /// Selection threshold as |z|; echoed here because the CLI accepts
    /// thresholds only as p-values.
    pub lambda: Option<f64>,
    pub config: serde_json::Value,
    pub input_digests: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(config: serde_json::Value) -> Self {
        RunManifest {
            schema: mr_regger::report::SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect::<Vec<_>>().join(" "),
            seed: None,
            lambda: None,
            config,
            input_digests: Vec::new(),
        }
    }

    pub fn digest_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.input_digests.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let path = out_dir.as_ref().join("manifest.json");
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file =
        File::open(path).with_context(|| format!("opening {} for digest", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
