use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
struct Input {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    threads: usize,
    inputs: &'a BTreeMap<String, Input>,
    parameters: &'a serde_json::Value,
    artifacts: BTreeMap<String, String>,
    wall_clock_seconds: f64,
}

/// Collects what one command read and wrote; `finish` writes
/// `manifest.json` into the output directory.
pub struct RunRecord {
    command: String,
    argv: Vec<String>,
    inputs: BTreeMap<String, Input>,
    parameters: serde_json::Value,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl RunRecord {
    pub fn new(command: &str, argv: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            argv,
            inputs: BTreeMap::new(),
            parameters: serde_json::Value::Object(Default::default()),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        let entry = Input {
            path: path.display().to_string(),
            sha256: file_hash(path)?,
        };
        self.inputs.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("parameter serialises");
        if let serde_json::Value::Object(map) = &mut self.parameters {
            map.insert(key.to_string(), value);
        }
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn outputs(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.outputs.extend(paths);
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let mut artifacts = BTreeMap::new();
        for p in &self.outputs {
            let name = p.strip_prefix(dir).unwrap_or(p).display().to_string();
            artifacts.insert(name, file_hash(p)?);
        }
        let manifest = Manifest {
            tool: "flatpop",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            argv: &self.argv,
            threads: rayon::current_num_threads(),
            inputs: &self.inputs,
            parameters: &self.parameters,
            artifacts,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
