//! Run manifests written next to every data file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: Value,
    pub solver: Value,
    pub seed: String,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

/// Collects the pieces of a manifest while a command runs.
pub struct ManifestBuilder {
    command: String,
    params: Value,
    solver: Value,
    seed: String,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: Value::Null,
            solver: Value::Null,
            seed: String::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn params<T: Serialize>(&mut self, v: &T) -> &mut Self {
        self.params = serde_json::to_value(v).unwrap_or(Value::Null);
        self
    }

    pub fn solver<T: Serialize>(&mut self, v: &T) -> &mut Self {
        self.solver = serde_json::to_value(v).unwrap_or(Value::Null);
        self
    }

    pub fn seed(&mut self, s: impl Into<String>) -> &mut Self {
        self.seed = s.into();
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Write `manifest.json` into `dir`.
    pub fn finish(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let m = RunManifest {
            command: self.command.clone(),
            argv: std::env::args().collect(),
            params: self.params.clone(),
            solver: self.solver.clone(),
            seed: self.seed.clone(),
            outputs: self.outputs.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
        };
        let path = dir.join("manifest.json");
        let f = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(f, &m)?;
        Ok(path)
    }
}
