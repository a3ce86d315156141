use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, Criterion};
use mspider_bench::{toy, toy_all};
use mspider_core::augment::{synthesize_examples, Provenance, SynonymEntry, SynonymMap, SynthesisPolicy};
use mspider_core::linker::{fuzzy_item_score, link_report, tokenize};
use mspider_core::model::Language;
use mspider_core::sql::{evaluate_corpus, parse, Canonicalizer, ValueMode};

fn sql(c: &mut Criterion) {
    let ds = toy(Language::En);
    let gold: Vec<String> = ds.examples.iter().map(|e| e.gold_sql.clone()).collect();
    c.bench_function("parse_toy_gold", |b| {
        b.iter(|| {
            for e in &ds.examples {
                std::hint::black_box(parse(&e.gold_sql, &ds.schemas[&e.db_id]).unwrap());
            }
        })
    });
    c.bench_function("canonicalize_toy_gold", |b| {
        let trees: Vec<_> = ds
            .examples
            .iter()
            .map(|e| (Canonicalizer::new(&ds.schemas[&e.db_id]), parse(&e.gold_sql, &ds.schemas[&e.db_id]).unwrap()))
            .collect();
        b.iter(|| {
            for (c, t) in &trees {
                std::hint::black_box(c.canonicalize(t, ValueMode::WithoutValues));
            }
        })
    });
    c.bench_function("evaluate_toy_corpus", |b| {
        b.iter(|| evaluate_corpus(&ds.examples, &gold, &ds.schemas, ValueMode::WithoutValues).unwrap())
    });
}

fn linking(c: &mut Criterion) {
    let en = tokenize("List the name, born state and age of the heads of departments ordered by age.", Language::En);
    let zh = tokenize("列出各部门负责人的姓名、出生州和年龄，按年龄排序。", Language::Zh);
    c.bench_function("fuzzy_item_score_en", |b| b.iter(|| fuzzy_item_score("born state", &en)));
    c.bench_function("fuzzy_item_score_zh", |b| b.iter(|| fuzzy_item_score("出生州", &zh)));
    let all = toy_all();
    let refs: Vec<_> = all.iter().collect();
    c.bench_function("link_report_toy", |b| b.iter(|| link_report(&refs)));
}

fn synthesis(c: &mut Criterion) {
    let ds = toy(Language::En);
    let entry = |s: &str| SynonymEntry {
        synonym: s.into(),
        forward: 0.9,
        backward: 0.9,
        provenance: vec![Provenance {
            intermediate: Language::De,
            round: 1,
            fallback: false,
        }],
    };
    let synonyms: SynonymMap = BTreeMap::from([(
        "concert_singer".to_string(),
        BTreeMap::from([
            ("singer".to_string(), vec![entry("vocalist"), entry("performer")]),
            ("singer.Age".to_string(), vec![entry("years")]),
            ("stadium".to_string(), vec![entry("arena")]),
        ]),
    )]);
    let policy = SynthesisPolicy {
        variants_per_example: 2,
        replace_probability: 0.5,
        seed: 1,
    };
    c.bench_function("synthesize_toy", |b| b.iter(|| synthesize_examples(&ds, &synonyms, &policy).unwrap()));
}

criterion_group!(benches, sql, linking, synthesis);
criterion_main!(benches);
