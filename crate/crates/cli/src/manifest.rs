use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mspider_core::backend::BackendIdentity;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io, CliError};

pub const RUN_MANIFEST: &str = "run.json";

/// Written next to every artifact: what ran, on which inputs, with which
/// settings, and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    /// Input path → sha256 hex.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → sha256 hex.
    pub outputs: BTreeMap<String, String>,
    pub backends: Vec<BackendIdentity>,
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        self.files
            .insert(name.to_string(), hex::encode(Sha256::digest(text.as_bytes())));
        Ok(())
    }

    /// Records a file some other component wrote into the directory.
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let d = digest_file(&self.dir.join(name))?;
        self.files.insert(name.to_string(), d);
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        inputs: &[PathBuf],
        backends: Vec<BackendIdentity>,
    ) -> Result<RunManifest, CliError> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), digest_file(p)?);
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            inputs: digests,
            outputs: self.files,
            backends,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(RUN_MANIFEST);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        Ok(manifest)
    }
}

pub fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
