use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Thread count is deliberately absent:
/// outputs do not depend on it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub params: Value,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u128>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, params: Value) -> Self {
        RunManifest {
            schema: SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            params,
            inputs: Vec::new(),
            wall_clock_ms: None,
        }
    }

    /// Records the digest of an input file (and its layout sidecar when present).
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        let sidecar = topocell::layout::sidecar_path(path);
        if sidecar != path && sidecar.exists() {
            let bytes = fs::read(&sidecar).with_context(|| format!("reading {}", sidecar.display()))?;
            self.inputs.push(InputDigest {
                path: sidecar.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        Ok(())
    }
}

/// `<out>.manifest.json`, written next to non-JSON artifacts.
pub fn write_sidecar(out: &Path, manifest: &RunManifest) -> Result<()> {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    let text = serde_json::to_string_pretty(manifest)? + "\n";
    fs::write(&name, text).with_context(|| format!("writing {}", Path::new(&name).display()))
}
