use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mspider_core::augment::{
    build_augmented_set, emit_training_files, synthesize_examples, AugmentConfig, Separators, SynonymMap,
    SynonymSource, SynthesisPolicy, Thresholds, FINETUNE_FILE, FINETUNE_TABLES_FILE, MANIFEST_FILE, WARMUP_FILE,
    WARMUP_TABLES_FILE,
};
use mspider_core::backend::BackendIdentity;
use mspider_core::linker::link_report;
use mspider_core::model::{
    dataset_stats, load_corpus_dir, load_dataset, validate_example, Dataset,
    DatasetStats, Language, Severity, Split,
};
use mspider_core::prep::{self, ZeroShotJob, ZeroShotMode};
use mspider_core::sql::{evaluate_corpus, hardness, parse, read_predictions, Hardness, ValueMode};
use serde::{Deserialize, Serialize};

use crate::args::DataArgs;
use crate::backend::{Backend, BackendChoice};
use crate::error::{io, CliError};
use crate::manifest::{pretty, Outputs};

pub const AUGMENTED_FILE: &str = "augmented_schema.json";
pub const AUGMENT_REPORT_FILE: &str = "augment_report.json";
pub const AUGMENT_MANIFEST_FILE: &str = "augment_manifest.json";
pub const SKIPPED_FILE: &str = "skipped.json";
pub const EVAL_REPORT_FILE: &str = "report.json";

/// Resolved inputs of one dataset argument group.
pub struct Loaded {
    pub datasets: Vec<Dataset>,
    pub files: Vec<PathBuf>,
}

impl Loaded {
    /// The single dataset a command works on.
    pub fn one(mut self) -> Result<(Dataset, Vec<PathBuf>), CliError> {
        match self.datasets.len() {
            1 => Ok((self.datasets.remove(0), self.files)),
            _ => Err(CliError::Usage(
                "this command needs a single split; pass --split with --corpus".into(),
            )),
        }
    }
}

fn corpus_files(dir: &Path, split: Option<Split>) -> Result<Vec<PathBuf>, CliError> {
    let mut files = vec![dir.join("tables.json")];
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let train = name.starts_with("train") && name.ends_with(".json");
            let dev = name == "dev.json";
            match split {
                Some(Split::Train) => train,
                Some(Split::Dev) => dev,
                Some(Split::Test) => false,
                None => train || dev,
            }
        })
        .collect();
    entries.sort();
    files.extend(entries);
    Ok(files)
}

pub fn load(args: &DataArgs) -> Result<Loaded, CliError> {
    if let Some(dir) = &args.corpus {
        return load_dir(dir, args.lang, args.split);
    }
    let tables = args
        .tables
        .as_ref()
        .ok_or_else(|| CliError::Usage("pass --db and --gold, or --corpus".into()))?;
    if args.examples.is_empty() {
        return Err(CliError::Usage("--gold needs at least one examples file".into()));
    }
    for p in std::iter::once(tables).chain(&args.examples) {
        if !p.exists() {
            return Err(CliError::Usage(format!("no such file: {}", p.display())));
        }
    }
    let ds = load_dataset(tables, &args.examples, args.lang, args.split.unwrap_or(Split::Dev))?;
    let mut files = vec![tables.clone()];
    files.extend(args.examples.iter().cloned());
    Ok(Loaded {
        datasets: vec![ds],
        files,
    })
}

fn load_dir(dir: &Path, lang: Language, split: Option<Split>) -> Result<Loaded, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("no such directory: {}", dir.display())));
    }
    let corpus = load_corpus_dir(dir, lang)?;
    let datasets: Vec<Dataset> = match split {
        None => corpus.datasets().into_iter().cloned().collect(),
        Some(Split::Train) => corpus.train.into_iter().collect(),
        Some(Split::Dev) => corpus.dev.into_iter().collect(),
        Some(Split::Test) => Vec::new(),
    };
    if datasets.is_empty() {
        return Err(CliError::Usage(format!("{} has no such split", dir.display())));
    }
    Ok(Loaded {
        datasets,
        files: corpus_files(dir, split)?,
    })
}

/// Language directories under a corpus root, restricted to `langs` if given.
fn load_root(root: &Path, langs: &[Language], split: Option<Split>) -> Result<Vec<(Language, Loaded)>, CliError> {
    let langs: Vec<Language> = if langs.is_empty() {
        Language::ALL.into_iter().filter(|l| root.join(l.code()).is_dir()).collect()
    } else {
        langs.to_vec()
    };
    if langs.is_empty() {
        return Err(CliError::Usage(format!("no language directories under {}", root.display())));
    }
    langs
        .into_iter()
        .map(|l| Ok((l, load_dir(&root.join(l.code()), l, split)?)))
        .collect()
}

fn print_json(value: &impl Serialize) {
    print!("{}", pretty(value));
}

fn render_stats(label: &str, s: &DatasetStats) -> String {
    format!(
        "{label}: {} questions, {} unique queries, {} databases, {} tables, {} columns, {} unparsable gold\n",
        s.questions, s.unique_queries, s.databases, s.tables, s.columns, s.unparsable_gold
    )
}

pub fn stats(data: &DataArgs, root: Option<&Path>, langs: &[Language], json: bool) -> Result<(), CliError> {
    let groups = match root {
        Some(r) => load_root(r, langs, data.split)?,
        None => vec![(data.lang, load(data)?)],
    };
    let mut all = BTreeMap::new();
    for (lang, loaded) in &groups {
        let refs: Vec<&Dataset> = loaded.datasets.iter().collect();
        all.insert(*lang, dataset_stats(&refs));
    }
    if json {
        print_json(&all);
    } else {
        for (lang, s) in &all {
            print!("{}", render_stats(lang.code(), s));
        }
    }
    Ok(())
}

pub fn validate(data: &DataArgs, json: bool) -> Result<(), CliError> {
    let loaded = load(data)?;
    let mut findings = Vec::new();
    let mut total = 0;
    for ds in &loaded.datasets {
        for e in &ds.examples {
            total += 1;
            findings.extend(validate_example(e, &ds.schemas[&e.db_id]));
        }
    }
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    if json {
        print_json(&findings);
    } else {
        for f in &findings {
            let sev = match f.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            println!("{}\t{sev}\t{:?}\t{}", f.example_id, f.kind, f.detail);
        }
        println!(
            "{total} examples, {errors} errors, {} warnings",
            findings.len() - errors
        );
    }
    if errors > 0 {
        return Err(CliError::Data(format!("{errors} examples failed validation")));
    }
    Ok(())
}

pub fn evaluate(
    data: &DataArgs,
    pred: &Path,
    with_values: bool,
    out: Option<&Path>,
    json: bool,
) -> Result<(), CliError> {
    let (ds, mut files) = load(data)?.one()?;
    if !pred.exists() {
        return Err(CliError::Usage(format!("no such file: {}", pred.display())));
    }
    let predictions = read_predictions(pred)?;
    let mode = if with_values {
        ValueMode::WithValues
    } else {
        ValueMode::WithoutValues
    };
    let report = evaluate_corpus(&ds.examples, &predictions, &ds.schemas, mode)?;
    if json {
        print_json(&report);
    } else {
        print!("{}", report.render_text());
    }
    if let Some(dir) = out {
        let mut o = Outputs::create(dir)?;
        o.write(EVAL_REPORT_FILE, &pretty(&report))?;
        files.push(pred.to_path_buf());
        o.finish(
            "evaluate",
            serde_json::json!({"mode": mode, "lang": data.lang}),
            &files,
            vec![],
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HardnessRow<'a> {
    example_id: &'a str,
    hardness: Option<Hardness>,
}

pub fn hardness_cmd(data: &DataArgs, details: bool, json: bool) -> Result<(), CliError> {
    let loaded = load(data)?;
    let mut counts: BTreeMap<Hardness, usize> = Hardness::ALL.iter().map(|&h| (h, 0)).collect();
    let mut rows = Vec::new();
    let mut unparsable = 0;
    for ds in &loaded.datasets {
        for e in &ds.examples {
            let h = parse(&e.gold_sql, &ds.schemas[&e.db_id]).ok().map(|t| hardness(&t));
            match h {
                Some(h) => *counts.entry(h).or_default() += 1,
                None => unparsable += 1,
            }
            rows.push(HardnessRow {
                example_id: &e.example_id,
                hardness: h,
            });
        }
    }
    if json {
        let v = if details {
            serde_json::json!({"counts": counts, "unparsable": unparsable, "examples": rows})
        } else {
            serde_json::json!({"counts": counts, "unparsable": unparsable})
        };
        print_json(&v);
        return Ok(());
    }
    if details {
        for r in &rows {
            println!("{}\t{}", r.example_id, r.hardness.map_or("unparsable", Hardness::as_str));
        }
    }
    for (h, n) in &counts {
        println!("{:<8}{n}", h.as_str());
    }
    println!("{:<8}{unparsable}", "skipped");
    Ok(())
}

pub fn link_score(data: &DataArgs, root: Option<&Path>, langs: &[Language], json: bool) -> Result<(), CliError> {
    let split = data.split.or(root.map(|_| Split::Dev));
    let groups = match root {
        Some(r) => load_root(r, langs, split)?,
        None => vec![(data.lang, load(data)?)],
    };
    let datasets: Vec<&Dataset> = groups.iter().flat_map(|(_, l)| l.datasets.iter()).collect();
    let report = link_report(&datasets);
    if json {
        print_json(&report);
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

/// Everything besides the synonyms that `synthesize` needs from `augment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub language: Language,
    pub seed: Option<u64>,
    pub config: AugmentConfig,
    pub separators: Separators,
    pub translator: BackendIdentity,
    pub nli: BackendIdentity,
    pub synonyms: usize,
}

pub struct AugmentArgs<'a> {
    pub data: &'a DataArgs,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub config: AugmentConfig,
}

pub fn augment(a: AugmentArgs<'_>, backend: &BackendChoice) -> Result<(), CliError> {
    let (ds, files) = load(a.data)?.one()?;
    a.config.validate()?;
    let backend = Backend::open(backend)?;
    let (set, report) = build_augmented_set(&ds, &a.config, backend.translator(), backend.nli())?;
    backend.flush()?;

    let manifest = AugmentManifest {
        language: set.language,
        seed: a.seed,
        config: a.config.clone(),
        separators: set.separators.clone(),
        translator: set.translator.clone(),
        nli: set.nli.clone(),
        synonyms: set.synonym_count(),
    };
    let mut o = Outputs::create(a.out)?;
    o.write(AUGMENTED_FILE, &set.entries_json())?;
    o.write(AUGMENT_REPORT_FILE, &pretty(&report))?;
    o.write(AUGMENT_MANIFEST_FILE, &pretty(&manifest))?;
    o.finish(
        "augment",
        serde_json::json!({"seed": a.seed, "augment": a.config}),
        &files,
        vec![set.translator.clone(), set.nli.clone()],
    )?;
    println!(
        "{} items, {} slots, {} unique candidates, {} accepted, {} rejected ({} verification errors)",
        report.items,
        report.slots,
        report.unique_candidates,
        report.accepted,
        report.rejected,
        report.verification_errors
    );
    println!(
        "acceptance without verification {:.3}, with verification {:.3}",
        report.acceptance_rate_without_verification, report.acceptance_rate_with_verification
    );
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn synthesize(
    data: &DataArgs,
    augmented: &Path,
    out: &Path,
    policy: SynthesisPolicy,
) -> Result<(), CliError> {
    let (ds, mut files) = load(data)?.one()?;
    policy.validate()?;
    let entries_path = augmented.join(AUGMENTED_FILE);
    let manifest_path = augmented.join(AUGMENT_MANIFEST_FILE);
    for p in [&entries_path, &manifest_path] {
        if !p.exists() {
            return Err(CliError::Usage(format!("no such file: {}", p.display())));
        }
    }
    let synonyms: SynonymMap = read_json(&entries_path)?;
    let aug: AugmentManifest = read_json(&manifest_path)?;
    let expanded = synthesize_examples(&ds, &synonyms, &policy)?;
    let source = SynonymSource {
        thresholds: aug.config.thresholds.clone(),
        translator: aug.translator.clone(),
        nli: aug.nli.clone(),
    };
    let training = emit_training_files(&ds, &expanded, &policy, &source, out)?;
    let mut o = Outputs::create(out)?;
    for f in [WARMUP_FILE, WARMUP_TABLES_FILE, FINETUNE_FILE, FINETUNE_TABLES_FILE, MANIFEST_FILE] {
        o.record(f)?;
    }
    o.write(SKIPPED_FILE, &pretty(&expanded.skipped))?;
    files.push(entries_path);
    files.push(manifest_path);
    o.finish(
        "synthesize",
        serde_json::json!({"policy": policy, "thresholds": aug.config.thresholds}),
        &files,
        vec![aug.translator, aug.nli],
    )?;
    println!(
        "{} originals, {} variants, {} skipped, expansion {:.3}",
        training.counts.originals,
        training.counts.variants,
        training.counts.skipped,
        expanded.expansion_factor()
    );
    Ok(())
}

pub fn prep_zeroshot(
    data: &DataArgs,
    mode: ZeroShotMode,
    target: Option<Language>,
    out: &Path,
    backend: &BackendChoice,
) -> Result<(), CliError> {
    let (ds, files) = load(data)?.one()?;
    let source = data.lang;
    let target = match (mode, target) {
        (ZeroShotMode::TranslateThenPredict, t) => t.unwrap_or(Language::En),
        (ZeroShotMode::DirectlyPredict, t) => t.unwrap_or(source),
        (ZeroShotMode::TranslateThenTrain, Some(t)) => t,
        (ZeroShotMode::TranslateThenTrain, None) => {
            return Err(CliError::Usage("translate_then_train needs --target".into()))
        }
    };
    let job = ZeroShotJob {
        mode,
        source,
        target,
        inputs: files.iter().map(|p| p.display().to_string()).collect(),
        output_dir: out.display().to_string(),
    };
    job.validate()?;
    let (prepared, identity) = match mode {
        ZeroShotMode::DirectlyPredict => (
            prep::PreparedDataset {
                dataset: ds,
                flags: Vec::new(),
            },
            None,
        ),
        _ => {
            let b = Backend::open(backend)?;
            let p = match mode {
                ZeroShotMode::TranslateThenPredict => prep::prep_translate_then_predict(&ds, b.translator())?,
                _ => prep::prep_translate_then_train(&ds, target, b.translator())?,
            };
            b.flush()?;
            (p, Some(b.identity()))
        }
    };
    let manifest = prep::write_prepared(out, &job, &prepared, identity.clone())?;
    let mut o = Outputs::create(out)?;
    for f in [prep::EXAMPLES_FILE, prep::TABLES_FILE, prep::MANIFEST_FILE] {
        o.record(f)?;
    }
    o.finish(
        "prep-zeroshot",
        serde_json::json!({"mode": mode, "source": source, "target": target}),
        &files,
        identity.into_iter().collect(),
    )?;
    println!("{} examples, {} flagged texts", manifest.examples, manifest.flags.len());
    Ok(())
}

pub fn thresholds_from(default: Option<f64>, pairs: &[String], base: Thresholds) -> Result<Thresholds, CliError> {
    let mut t = base;
    if let Some(d) = default {
        t.default = d;
    }
    for p in pairs {
        let (l, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("threshold `{p}` is not LANG=VALUE")))?;
        let lang: Language = l.parse().map_err(|e: mspider_core::model::UnknownLanguage| CliError::Usage(e.to_string()))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("threshold `{p}` has no numeric value")))?;
        t.per_language.insert(lang, v);
    }
    Ok(t)
}
