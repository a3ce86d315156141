//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use mspider_core::model::{load_dataset, Dataset, Language, Split};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// One language copy of the toy corpus.
pub fn toy(lang: Language) -> Dataset {
    let dir = fixtures_dir().join("toy").join(lang.code());
    load_dataset(dir.join("tables.json"), &[dir.join("dev.json")], lang, Split::Dev).expect("toy fixture loads")
}

/// The toy corpus in every language it ships with.
pub fn toy_all() -> Vec<Dataset> {
    [Language::En, Language::De, Language::Es, Language::Fr, Language::Ja, Language::Zh, Language::Vi]
        .into_iter()
        .map(toy)
        .collect()
}
