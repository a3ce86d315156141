//! Schema augmentation: back-translated synonym candidates, entailment
//! verification, renamed training variants and training-file emission.

mod backtranslate;
mod emit;
mod pipeline;
mod synth;
mod template;
mod verify;

use std::path::{Path, PathBuf};

pub use backtranslate::{backtranslate_item, probe_separators, CandidateSet, Provenance, Slot, SlotOutcome};
pub use emit::{
    emit_training_files, sha256_hex, SynonymSource, TrainingCounts, TrainingManifest, FINETUNE_FILE,
    FINETUNE_TABLES_FILE, MANIFEST_FILE, WARMUP_FILE, WARMUP_TABLES_FILE,
};
pub use pipeline::{
    build_augmented_set, AugmentConfig, AugmentReport, AugmentedSchemaSet, RejectionRecord, SynonymEntry, SynonymMap,
};
pub use synth::{synthesize_examples, to_identifier, SkipReason, SkippedVariant, SynthesisOutput, SynthesisPolicy};
pub use template::{
    extract_candidate, normalize_candidate, render_context_template, render_nli_template, ItemKind, SchemaItem,
    Separators,
};
pub use verify::{verify_pair, Rejection, Thresholds, Verification, VerifiedSynonym};

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AugmentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AugmentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
