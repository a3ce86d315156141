use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synth::{SynthesisOutput, SynthesisPolicy};
use super::verify::Thresholds;
use super::AugmentError;
use crate::backend::BackendIdentity;
use crate::model::{emit_examples, emit_schemas, Dataset};

pub const WARMUP_FILE: &str = "warmup.json";
pub const WARMUP_TABLES_FILE: &str = "warmup_tables.json";
pub const FINETUNE_FILE: &str = "finetune.json";
pub const FINETUNE_TABLES_FILE: &str = "finetune_tables.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCounts {
    pub originals: usize,
    pub variants: usize,
    pub skipped: usize,
    pub warmup: usize,
    pub finetune: usize,
}

/// Everything needed to rerun synthesis and emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub seed: u64,
    pub policy: SynthesisPolicy,
    pub thresholds: Thresholds,
    pub translator: BackendIdentity,
    pub nli: BackendIdentity,
    pub warmup_epochs: u32,
    pub counts: TrainingCounts,
    /// File name → sha256 hex of its contents.
    pub files: BTreeMap<String, String>,
}

impl TrainingManifest {
    pub fn load(path: &Path) -> Result<Self, AugmentError> {
        let text = fs::read_to_string(path).map_err(|e| AugmentError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AugmentError::Manifest(format!("{}: {e}", path.display())))
    }
}

/// Provenance of the synonyms used for synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymSource {
    pub thresholds: Thresholds,
    pub translator: BackendIdentity,
    pub nli: BackendIdentity,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(dir: &Path, name: &str, text: &str, files: &mut BTreeMap<String, String>) -> Result<PathBuf, AugmentError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| AugmentError::io(&path, e))?;
    files.insert(name.to_string(), sha256_hex(text.as_bytes()));
    Ok(path)
}

/// Writes the warm-up files (originals plus variants), the fine-tune files
/// (originals only) and the manifest into `dir`.
pub fn emit_training_files(
    original: &Dataset,
    expanded: &SynthesisOutput,
    policy: &SynthesisPolicy,
    source: &SynonymSource,
    dir: &Path,
) -> Result<TrainingManifest, AugmentError> {
    fs::create_dir_all(dir).map_err(|e| AugmentError::io(dir, e))?;
    let mut files = BTreeMap::new();
    write(dir, WARMUP_FILE, &emit_examples(&expanded.examples), &mut files)?;
    write(dir, WARMUP_TABLES_FILE, &emit_schemas(expanded.schemas.values()), &mut files)?;
    write(dir, FINETUNE_FILE, &emit_examples(&original.examples), &mut files)?;
    let finetune_schemas = original.referenced_dbs();
    write(
        dir,
        FINETUNE_TABLES_FILE,
        &emit_schemas(finetune_schemas.iter().map(|id| &original.schemas[id])),
        &mut files,
    )?;
    let manifest = TrainingManifest {
        seed: policy.seed,
        policy: policy.clone(),
        thresholds: source.thresholds.clone(),
        translator: source.translator.clone(),
        nli: source.nli.clone(),
        warmup_epochs: 3,
        counts: TrainingCounts {
            originals: expanded.originals,
            variants: expanded.variants,
            skipped: expanded.skipped.len(),
            warmup: expanded.examples.len(),
            finetune: original.examples.len(),
        },
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| AugmentError::io(&path, e))?;
    Ok(manifest)
}
