use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backtranslate::{backtranslate_item, probe_separators, Provenance, SlotOutcome};
use super::template::{normalize_candidate, SchemaItem, Separators};
use super::verify::{verify_pair, Rejection, Thresholds};
use super::AugmentError;
use crate::backend::{BackendIdentity, EntailmentModel, Translator};
use crate::linker;
use crate::model::{Dataset, Language};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Intermediate languages; the item's own language is skipped.
    pub intermediates: Vec<Language>,
    pub rounds: u32,
    pub thresholds: Thresholds,
    /// Ask the translator for connectives instead of using the built-in table.
    pub probe_separators: bool,
    /// Connectives that take precedence over probing.
    pub separators: BTreeMap<Language, Separators>,
    /// Restricts augmentation to these databases.
    pub databases: Option<Vec<String>>,
    /// Language of the schema display names; defaults to the dataset's.
    pub language: Option<Language>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            intermediates: Language::ALL.to_vec(),
            rounds: 3,
            thresholds: Thresholds::default(),
            probe_separators: true,
            separators: BTreeMap::new(),
            databases: None,
            language: None,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.rounds == 0 {
            return Err(AugmentError::Config("rounds must be at least 1".into()));
        }
        if self.intermediates.is_empty() {
            return Err(AugmentError::Config("no intermediate languages".into()));
        }
        let all = std::iter::once(self.thresholds.default).chain(self.thresholds.per_language.values().copied());
        for t in all {
            if !(0.0..=1.0).contains(&t) {
                return Err(AugmentError::Config(format!("threshold {t} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Upper bound on slots per item.
    pub fn max_slots(&self) -> usize {
        self.intermediates.len() * self.rounds as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymEntry {
    pub synonym: String,
    pub forward: f64,
    pub backward: f64,
    pub provenance: Vec<Provenance>,
}

/// db_id → item key → verified synonyms.
pub type SynonymMap = BTreeMap<String, BTreeMap<String, Vec<SynonymEntry>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSchemaSet {
    pub language: Language,
    pub thresholds: Thresholds,
    pub separators: Separators,
    pub translator: BackendIdentity,
    pub nli: BackendIdentity,
    pub entries: SynonymMap,
}

impl AugmentedSchemaSet {
    /// The augmented schema file: entries only, keys sorted.
    pub fn entries_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.entries).expect("entries serialize");
        s.push('\n');
        s
    }

    pub fn synonym_count(&self) -> usize {
        self.entries.values().flat_map(|m| m.values()).map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub db_id: String,
    pub item: String,
    pub candidate: String,
    pub rejection: Rejection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub items: usize,
    pub max_slots_per_item: usize,
    pub slots: usize,
    pub largest_item_slots: usize,
    pub extraction_failures: usize,
    pub fallback_candidates: usize,
    pub backend_failures: usize,
    pub unique_candidates: usize,
    pub discarded_identical: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub verification_errors: usize,
    /// Every unique candidate would be kept without verification.
    pub acceptance_rate_without_verification: f64,
    pub acceptance_rate_with_verification: f64,
    /// Accepted synonyms sharing at least one token with the original name.
    pub lexical_overlap_rate: f64,
    pub separators_probed: bool,
    pub rejections: Vec<RejectionRecord>,
}

struct ItemOutcome {
    item: SchemaItem,
    slots: usize,
    extraction_failures: usize,
    fallback_candidates: usize,
    backend_failures: usize,
    unique: usize,
    discarded_identical: usize,
    accepted: Vec<SynonymEntry>,
    rejections: Vec<RejectionRecord>,
}

fn shares_token(a: &str, b: &str, lang: Language) -> bool {
    let ta: BTreeSet<String> = linker::tokenize(a, lang).units.into_iter().collect();
    linker::tokenize(b, lang).units.iter().any(|t| ta.contains(t))
}

fn process_item(
    item: &SchemaItem,
    lang: Language,
    config: &AugmentConfig,
    seps: &Separators,
    translator: &dyn Translator,
    nli: &dyn EntailmentModel,
) -> ItemOutcome {
    let set = backtranslate_item(item, lang, &config.intermediates, config.rounds, seps, translator);
    let mut out = ItemOutcome {
        item: item.clone(),
        slots: set.slots.len(),
        extraction_failures: set.slots.iter().filter(|s| s.fallback).count(),
        fallback_candidates: set
            .slots
            .iter()
            .filter(|s| s.fallback && matches!(s.outcome, SlotOutcome::Candidate { .. }))
            .count(),
        backend_failures: set
            .slots
            .iter()
            .filter(|s| matches!(s.outcome, SlotOutcome::BackendError { .. }))
            .count(),
        unique: 0,
        discarded_identical: 0,
        accepted: Vec::new(),
        rejections: Vec::new(),
    };

    // first surface form per normalized candidate, in slot order
    let original = normalize_candidate(&item.display_name);
    let mut unique: Vec<(String, String, Vec<Provenance>)> = Vec::new();
    for (text, prov) in set.candidates() {
        let norm = normalize_candidate(text);
        if norm.is_empty() {
            continue;
        }
        if norm == original {
            out.discarded_identical += 1;
            continue;
        }
        match unique.iter_mut().find(|(_, n, _)| *n == norm) {
            Some((_, _, provs)) => provs.push(prov),
            None => unique.push((text.trim().to_string(), norm, vec![prov])),
        }
    }
    out.unique = unique.len();

    for (surface, _, provenance) in unique {
        match verify_pair(item, &surface, lang, &config.thresholds, nli) {
            Ok(v) => out.accepted.push(SynonymEntry {
                synonym: v.synonym,
                forward: v.forward,
                backward: v.backward,
                provenance,
            }),
            Err(rejection) => out.rejections.push(RejectionRecord {
                db_id: item.db_id.clone(),
                item: item.key(),
                candidate: surface,
                rejection,
            }),
        }
    }
    out
}

/// Back-translates, extracts, deduplicates and verifies synonyms for every
/// table and column of the dataset's databases.
pub fn build_augmented_set(
    dataset: &Dataset,
    config: &AugmentConfig,
    translator: &dyn Translator,
    nli: &dyn EntailmentModel,
) -> Result<(AugmentedSchemaSet, AugmentReport), AugmentError> {
    config.validate()?;
    let lang = config
        .language
        .or_else(|| dataset.language())
        .ok_or_else(|| AugmentError::Config("dataset language is mixed or unknown; set it explicitly".into()))?;
    let db_ids: Vec<String> = match &config.databases {
        Some(ids) => {
            for id in ids {
                if !dataset.schemas.contains_key(id) {
                    return Err(AugmentError::Config(format!("unknown database `{id}`")));
                }
            }
            ids.clone()
        }
        None => dataset.schemas.keys().cloned().collect(),
    };
    let (seps, probed) = match config.separators.get(&lang) {
        Some(s) => (s.clone(), false),
        None if config.probe_separators => {
            let (s, ok) = probe_separators(translator, lang);
            if !ok {
                tracing::warn!(%lang, "separator probe failed, using built-in connectives");
            }
            (s, ok)
        }
        None => (Separators::builtin(lang), false),
    };

    let items: Vec<SchemaItem> = db_ids
        .iter()
        .flat_map(|id| SchemaItem::all(&dataset.schemas[id]))
        .collect();
    let outcomes: Vec<ItemOutcome> = items
        .par_iter()
        .map(|item| process_item(item, lang, config, &seps, translator, nli))
        .collect();

    let mut report = AugmentReport {
        items: items.len(),
        max_slots_per_item: config.max_slots(),
        separators_probed: probed,
        ..AugmentReport::default()
    };
    let mut entries: SynonymMap = BTreeMap::new();
    let mut overlapping = 0;
    for o in outcomes {
        report.slots += o.slots;
        report.largest_item_slots = report.largest_item_slots.max(o.slots);
        report.extraction_failures += o.extraction_failures;
        report.fallback_candidates += o.fallback_candidates;
        report.backend_failures += o.backend_failures;
        report.unique_candidates += o.unique;
        report.discarded_identical += o.discarded_identical;
        report.accepted += o.accepted.len();
        for r in &o.rejections {
            match r.rejection {
                Rejection::BelowThreshold { .. } => report.rejected += 1,
                Rejection::BackendError { .. } => report.verification_errors += 1,
            }
        }
        report.rejections.extend(o.rejections);
        overlapping += o
            .accepted
            .iter()
            .filter(|s| shares_token(&s.synonym, &o.item.display_name, lang))
            .count();
        if !o.accepted.is_empty() {
            entries.entry(o.item.db_id.clone()).or_default().insert(o.item.key(), o.accepted);
        }
    }
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    report.acceptance_rate_without_verification = ratio(report.unique_candidates, report.unique_candidates);
    report.acceptance_rate_with_verification = ratio(report.accepted, report.unique_candidates);
    report.lexical_overlap_rate = ratio(overlapping, report.accepted);

    let set = AugmentedSchemaSet {
        language: lang,
        thresholds: config.thresholds.clone(),
        separators: seps,
        translator: translator.identity(),
        nli: nli.identity(),
        entries,
    };
    Ok((set, report))
}
