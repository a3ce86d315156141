use std::path::{Path, PathBuf};

use mspider_core::augment::{AugmentConfig, SynthesisPolicy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Contents of the `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub sidecar: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub seed: Option<u64>,
    pub augment: AugmentConfig,
    pub synthesize: SynthesisPolicy,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        // relative paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.fixtures, &mut cfg.cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mspider_core::model::Language;

    #[test]
    fn parses_sections() {
        let cfg: FileConfig = toml::from_str(
            r#"
            jobs = 2
            seed = 9
            [augment]
            rounds = 2
            intermediates = ["de", "fr"]
            [augment.thresholds]
            default = 0.7
            per_language = { zh = 0.75 }
            [synthesize]
            variants_per_example = 1
            replace_probability = 0.25
            "#,
        )
        .unwrap();
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.augment.rounds, 2);
        assert_eq!(cfg.augment.intermediates, [Language::De, Language::Fr]);
        assert_eq!(cfg.augment.thresholds.get(Language::Zh), 0.75);
        assert_eq!(cfg.augment.thresholds.get(Language::Ja), 0.7);
        assert!(cfg.augment.probe_separators);
        assert_eq!(cfg.synthesize.variants_per_example, 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("jobz = 2").is_err());
    }
}
