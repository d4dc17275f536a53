//! Run manifests: what was run, with which parameters and inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub parameters: Map<String, Value>,
    /// Input path -> sha256 of its contents.
    pub inputs: Map<String, Value>,
    pub outputs: Vec<String>,
    pub notes: Map<String, Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            seed: None,
            parameters: Map::new(),
            inputs: Map::new(),
            outputs: Vec::new(),
            notes: Map::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    /// Reads an input file, recording its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), Value::String(sha256_hex(&bytes)));
        Ok(bytes)
    }

    pub fn read_input_string(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Writes `contents` to `path` and records it as an output.
    pub fn write_output(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes the manifest next to `primary` as `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path) -> Result<PathBuf> {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
