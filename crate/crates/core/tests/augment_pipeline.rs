use std::collections::BTreeMap;

use mspider_core::augment::{
    build_augmented_set, emit_training_files, synthesize_examples, AugmentConfig, Provenance, Rejection,
    SkipReason, SynonymEntry, SynonymMap, SynonymSource, SynthesisPolicy, Thresholds, TrainingManifest,
    FINETUNE_FILE, MANIFEST_FILE, WARMUP_FILE,
};
use mspider_core::backend::{FixtureBackend, FixtureFile};
use mspider_core::model::{emit_examples, parse_examples, parse_schemas, Dataset, Language, Split};
use mspider_core::sql::{exact_match, parse, Canonicalizer, ValueMode};
use serde_json::json;

const TABLES: &str = r#"[{
  "db_id": "dm",
  "table_names": ["department", "region"],
  "table_names_original": ["department", "region"],
  "column_names": [[-1, "*"], [0, "head"], [0, "name"], [1, "name"]],
  "column_names_original": [[-1, "*"], [0, "head"], [0, "name"], [1, "name"]],
  "column_types": ["text", "text", "text", "text"],
  "primary_keys": [],
  "foreign_keys": []
}]"#;

fn dataset(sqls: &[&str]) -> Dataset {
    let schemas = parse_schemas("tables", TABLES).unwrap();
    let records: Vec<_> = sqls
        .iter()
        .enumerate()
        .map(|(i, q)| json!({"db_id": "dm", "question": format!("q{i}"), "query": q, "sql": {}}))
        .collect();
    let examples = parse_examples("dev", &json!(records).to_string(), &schemas, Language::En, Split::Train, 0).unwrap();
    Dataset {
        split: Split::Train,
        examples,
        schemas: schemas.into(),
    }
}

fn t(src: &str, tgt: &str, text: &str, output: &str) -> serde_json::Value {
    json!({"src": src, "tgt": tgt, "text": text, "output": output})
}

fn e(premise: &str, hypothesis: &str, score: f64) -> serde_json::Value {
    json!({"lang": "en", "premise": premise, "hypothesis": hypothesis, "score": score})
}

/// Hand-traced fixture: head yields chief (kept) and boss (one direction
/// low), department yields division then itself, everything else
/// round-trips unchanged.
fn backend() -> FixtureBackend {
    let file: FixtureFile = serde_json::from_value(json!({
        "version": "toy-1",
        "identity_translation": true,
        "translations": [
            t("en", "de", "head of department from (dm)", "Leiter der Abteilung aus (dm)"),
            t("de", "en", "Leiter der Abteilung aus (dm)", "chief of department from (dm)"),
            t("en", "de", "chief of department from (dm)", "Chef der Abteilung aus (dm)"),
            t("de", "en", "Chef der Abteilung aus (dm)", "Boss of the department from (dm)"),
            t("en", "de", "department from (dm)", "Abteilung aus (dm)"),
            t("de", "en", "Abteilung aus (dm)", "division from (dm)"),
            t("en", "de", "division from (dm)", "Sparte aus (dm)"),
            t("de", "en", "Sparte aus (dm)", "Department from (dm)"),
        ],
        "entailments": [
            e("department head (text)", "department chief (text)", 0.90),
            e("department chief (text)", "department head (text)", 0.88),
            e("department head (text)", "department Boss (text)", 0.90),
            e("department Boss (text)", "department head (text)", 0.50),
            e("department (table)", "division (table)", 0.80),
            e("division (table)", "department (table)", 0.70),
        ]
    }))
    .unwrap();
    FixtureBackend::new(file).unwrap()
}

fn config() -> AugmentConfig {
    AugmentConfig {
        intermediates: vec![Language::De],
        rounds: 2,
        probe_separators: false,
        ..AugmentConfig::default()
    }
}

fn entry(synonym: &str, forward: f64, backward: f64, round: u32) -> SynonymEntry {
    SynonymEntry {
        synonym: synonym.into(),
        forward,
        backward,
        provenance: vec![Provenance {
            intermediate: Language::De,
            round,
            fallback: false,
        }],
    }
}

#[test]
fn fixture_run_yields_the_traced_synonyms() {
    let ds = dataset(&["SELECT head FROM department"]);
    let b = backend();
    let (set, report) = build_augmented_set(&ds, &config(), &b, &b).unwrap();

    let expected: SynonymMap = BTreeMap::from([(
        "dm".to_string(),
        BTreeMap::from([
            ("department".to_string(), vec![entry("division", 0.80, 0.70, 1)]),
            ("department.head".to_string(), vec![entry("chief", 0.90, 0.88, 1)]),
        ]),
    )]);
    assert_eq!(set.entries, expected);
    assert_eq!(set.synonym_count(), 2);

    // 5 items, 2 slots each
    assert_eq!(report.items, 5);
    assert_eq!(report.slots, 10);
    assert_eq!(report.max_slots_per_item, 2);
    assert_eq!(report.extraction_failures, 0);
    assert_eq!(report.backend_failures, 0);
    assert_eq!(report.unique_candidates, 3);
    assert_eq!(report.discarded_identical, 7);
    assert_eq!(report.accepted, 2);
    assert_eq!(report.rejected, 1);
    assert_eq!(report.acceptance_rate_without_verification, 1.0);
    assert!((report.acceptance_rate_with_verification - 2.0 / 3.0).abs() < 1e-12);
    assert!(report.acceptance_rate_with_verification < report.acceptance_rate_without_verification);
    assert_eq!(report.rejections.len(), 1);
    assert_eq!(report.rejections[0].candidate, "Boss");
    assert_eq!(
        report.rejections[0].rejection,
        Rejection::BelowThreshold {
            forward: 0.90,
            backward: 0.50,
            threshold: 0.65
        }
    );
}

#[test]
fn augmented_set_is_deterministic() {
    let ds = dataset(&["SELECT head FROM department"]);
    let b = backend();
    let a = build_augmented_set(&ds, &config(), &b, &b).unwrap();
    let c = build_augmented_set(&ds, &config(), &b, &b).unwrap();
    assert_eq!(a.0.entries_json(), c.0.entries_json());
    assert_eq!(a.1, c.1);
}

#[test]
fn identity_backend_gives_empty_set_and_zero_acceptance() {
    let ds = dataset(&["SELECT head FROM department"]);
    let b = FixtureBackend::identity("id");
    let (set, report) = build_augmented_set(&ds, &config(), &b, &b).unwrap();
    assert!(set.entries.is_empty());
    assert_eq!(report.unique_candidates, 0);
    assert_eq!(report.accepted, 0);
    assert_eq!(report.acceptance_rate_with_verification, 0.0);
}

#[test]
fn verification_failures_are_item_level() {
    let ds = dataset(&["SELECT head FROM department"]);
    let b = backend();
    let nli = FixtureBackend::identity("nli");
    let (set, report) = build_augmented_set(&ds, &config(), &b, &nli).unwrap();
    assert!(set.entries.is_empty());
    assert_eq!(report.verification_errors, 3);
}

#[test]
fn bad_configuration_is_an_error() {
    let ds = dataset(&["SELECT head FROM department"]);
    let b = backend();
    let cfg = AugmentConfig { rounds: 0, ..config() };
    assert!(build_augmented_set(&ds, &cfg, &b, &b).is_err());
    let cfg = AugmentConfig {
        databases: Some(vec!["nope".into()]),
        ..config()
    };
    assert!(build_augmented_set(&ds, &cfg, &b, &b).is_err());
}

fn synonyms() -> SynonymMap {
    BTreeMap::from([(
        "dm".to_string(),
        BTreeMap::from([
            ("department".to_string(), vec![entry("division", 0.8, 0.7, 1)]),
            ("department.head".to_string(), vec![entry("chief", 0.9, 0.88, 1)]),
        ]),
    )])
}

fn always(variants: u32) -> SynthesisPolicy {
    SynthesisPolicy {
        variants_per_example: variants,
        replace_probability: 1.0,
        seed: 11,
    }
}

#[test]
fn renaming_rewrites_schema_and_sql() {
    let ds = dataset(&["SELECT head FROM department"]);
    let out = synthesize_examples(&ds, &synonyms(), &always(1)).unwrap();
    assert_eq!(out.examples.len(), 2);
    let v = &out.examples[1];
    assert_eq!(v.example_id, "train-00000#v1");
    assert_eq!(v.gold_sql, "SELECT chief FROM division");
    assert_eq!(v.question, "q0");
    assert!(!v.extra.contains_key("sql"));
    let schema = &out.schemas[&v.db_id];
    assert!(v.db_id.starts_with("dm__v"));
    assert_eq!(schema.tables[0].display_name, "division");
    assert_eq!(schema.tables[0].columns[0].display_name, "chief");
    assert_eq!(schema.tables[0].columns[0].original_name, "chief");
    assert!(out.schemas.contains_key("dm"));
}

#[test]
fn qualified_aliases_and_literals_are_handled() {
    let sql = "SELECT T1.head FROM department AS T1 JOIN region AS T2 ON T1.name = T2.name WHERE T1.head = 'head' AND department.name LIKE '%department%'";
    let ds = dataset(&[sql]);
    let out = synthesize_examples(&ds, &synonyms(), &always(1)).unwrap();
    assert_eq!(out.variants, 1, "{:?}", out.skipped);
    assert_eq!(
        out.examples[1].gold_sql,
        "SELECT T1.chief FROM division AS T1 JOIN region AS T2 ON T1.name = T2.name WHERE T1.chief = 'head' AND division.name LIKE '%department%'"
    );
}

#[test]
fn every_variant_reparses_and_matches_under_inverse() {
    let sqls = [
        "SELECT head FROM department",
        "SELECT count(*) FROM department WHERE head IN (SELECT name FROM region)",
        "SELECT head FROM department UNION SELECT name FROM region",
        "SELECT name FROM department GROUP BY head HAVING count(*) > 1 ORDER BY head DESC LIMIT 3",
    ];
    let ds = dataset(&sqls);
    let out = synthesize_examples(&ds, &synonyms(), &always(2)).unwrap();
    assert_eq!(out.examples.len(), 12);
    assert_eq!(out.expansion_factor(), 3.0);
    for v in &out.examples[4..] {
        assert!(parse(&v.gold_sql, &out.schemas[&v.db_id]).is_ok(), "{}", v.gold_sql);
        assert_ne!(v.db_id, "dm");
    }
}

#[test]
fn empty_synonyms_return_input() {
    let ds = dataset(&["SELECT head FROM department", "SELECT name FROM region"]);
    let out = synthesize_examples(&ds, &SynonymMap::new(), &always(2)).unwrap();
    assert_eq!(out.examples, ds.examples);
    assert_eq!(out.variants, 0);
    assert!(out.skipped.iter().all(|s| s.reason == SkipReason::NoReplacement));
}

#[test]
fn sibling_collisions_skip_the_variant() {
    let ds = dataset(&["SELECT head FROM department"]);
    let syn: SynonymMap = BTreeMap::from([(
        "dm".to_string(),
        BTreeMap::from([("department.head".to_string(), vec![entry("Name", 0.9, 0.9, 1)])]),
    )]);
    let out = synthesize_examples(&ds, &syn, &always(1)).unwrap();
    assert_eq!(out.variants, 0);
    assert!(matches!(out.skipped[0].reason, SkipReason::Collision { .. }));
}

#[test]
fn reserved_words_skip_the_variant() {
    let ds = dataset(&["SELECT head FROM department"]);
    let syn: SynonymMap = BTreeMap::from([(
        "dm".to_string(),
        BTreeMap::from([("department.head".to_string(), vec![entry("order", 0.9, 0.9, 1)])]),
    )]);
    let out = synthesize_examples(&ds, &syn, &always(1)).unwrap();
    assert!(matches!(out.skipped[0].reason, SkipReason::ReservedWord { .. }));
}

#[test]
fn synthesis_is_seeded() {
    let sqls: Vec<String> = (0..30).map(|_| "SELECT head FROM department".to_string()).collect();
    let refs: Vec<&str> = sqls.iter().map(String::as_str).collect();
    let ds = dataset(&refs);
    let policy = SynthesisPolicy {
        variants_per_example: 2,
        replace_probability: 0.5,
        seed: 3,
    };
    let a = synthesize_examples(&ds, &synonyms(), &policy).unwrap();
    let b = synthesize_examples(&ds, &synonyms(), &policy).unwrap();
    assert_eq!(emit_examples(&a.examples), emit_examples(&b.examples));
    assert!(a.variants > 0 && a.variants < 60);
    let other = synthesize_examples(&ds, &synonyms(), &SynthesisPolicy { seed: 4, ..policy }).unwrap();
    assert_ne!(emit_examples(&a.examples), emit_examples(&other.examples));
}

#[test]
fn variants_match_originals_under_inverse_renaming() {
    let ds = dataset(&["SELECT T1.head FROM department AS T1 WHERE T1.name = 'x'"]);
    let out = synthesize_examples(&ds, &synonyms(), &always(1)).unwrap();
    let v = &out.examples[1];
    // undo the renaming textually on this simple query
    let back = v.gold_sql.replace("chief", "head").replace("division", "department");
    let schema = &ds.schemas["dm"];
    let canon = Canonicalizer::new(schema);
    let m = exact_match(
        &canon.canonicalize(&parse(&back, schema).unwrap(), ValueMode::WithValues),
        &canon.canonicalize(&parse(&ds.examples[0].gold_sql, schema).unwrap(), ValueMode::WithValues),
    )
    .unwrap();
    assert!(m.exact);
}

#[test]
fn training_files_and_manifest() {
    let ds = dataset(&["SELECT head FROM department", "SELECT name FROM region"]);
    let policy = always(2);
    let out = synthesize_examples(&ds, &synonyms(), &policy).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let b = backend();
    let source = SynonymSource {
        thresholds: Thresholds::default(),
        translator: mspider_core::backend::Translator::identity(&b),
        nli: mspider_core::backend::EntailmentModel::identity(&b),
    };
    let manifest = emit_training_files(&ds, &out, &policy, &source, dir.path()).unwrap();

    let finetune = std::fs::read_to_string(dir.path().join(FINETUNE_FILE)).unwrap();
    assert_eq!(finetune, emit_examples(&ds.examples));
    let warmup: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(WARMUP_FILE)).unwrap()).unwrap();
    let n = ds.examples.len();
    assert!(warmup.len() >= n && warmup.len() <= n * (1 + policy.variants_per_example as usize));
    // renaming is schema-wide, so the region query gets variants too
    assert_eq!(warmup.len(), 6);

    let loaded = TrainingManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, manifest);
    assert_eq!(loaded.policy, policy);
    assert_eq!(loaded.thresholds, Thresholds::default());
    assert_eq!(loaded.translator.version, "toy-1");
    assert_eq!(loaded.warmup_epochs, 3);
    assert_eq!(
        loaded.files[FINETUNE_FILE],
        mspider_core::augment::sha256_hex(finetune.as_bytes())
    );
}
