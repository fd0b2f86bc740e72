use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::CliError;

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_secs: f64,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    command: &'static str,
    config: PathBuf,
    parameters: serde_json::Value,
    seed: Option<u64>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn start(command: &'static str, config: &Path) -> Self {
        ManifestBuilder {
            command,
            config: config.to_path_buf(),
            parameters: serde_json::Value::Null,
            seed: None,
            started: Instant::now(),
        }
    }

    pub fn parameters(mut self, p: serde_json::Value) -> Self {
        self.parameters = p;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Writes the manifest to `path`, listing `outputs`.
    pub fn write(self, path: &Path, outputs: &[PathBuf]) -> Result<(), CliError> {
        let m = RunManifest {
            command: self.command.to_string(),
            config: self.config.display().to_string(),
            parameters: self.parameters,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let text = foodchain::io::to_json_pretty(&m).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }
}

/// `report.json` -> `report.json.manifest.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Resolves the seed: flag, then `FOODCHAIN_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FOODCHAIN_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("FOODCHAIN_SEED={v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}
