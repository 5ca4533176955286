//! Run manifests: what was run, with which settings, reading and writing what.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// The command line as parsed, defaults filled in.
    pub command: Command,
    /// Library-level configuration the command resolved to.
    pub resolved: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &Command, resolved: serde_json::Value, inputs: Vec<PathBuf>, seed: Option<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: command.name().to_string(),
            command: command.clone(),
            resolved,
            inputs,
            outputs: Vec::new(),
            seed,
        }
    }

    /// Writes the manifest to `<output-stem>.manifest.json`.
    pub fn write(mut self, output: &Path, outputs: Vec<PathBuf>) -> Result<(), CliError> {
        self.outputs = outputs;
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        write_file(&sibling(output, ".manifest.json"), &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{} is not a run manifest: {e}", path.display())))
    }
}

/// `output` with its extension replaced by `suffix`, e.g. `out/plan.json`
/// and `.seeds.txt` give `out/plan.seeds.txt`.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut stem = output.with_extension("").into_os_string();
    stem.push(suffix);
    PathBuf::from(stem)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
