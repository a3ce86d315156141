use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mspider"));
    c.env_remove("MSPIDER_SIDECAR");
    c
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn toy(lang: &str) -> (PathBuf, PathBuf) {
    let d = fixtures().join("toy").join(lang);
    (d.join("tables.json"), d.join("dev.json"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gold_queries(path: &Path) -> Vec<String> {
    let v: Vec<Value> = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.iter().map(|e| e["query"].as_str().unwrap().to_string()).collect()
}

#[test]
fn evaluate_all_correct_predictions() {
    let (tables, dev) = toy("en");
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    fs::write(&pred, gold_queries(&dev).join("\n") + "\n").unwrap();
    let o = run(bin()
        .args(["evaluate", "--gold"])
        .arg(&dev)
        .arg("--pred")
        .arg(&pred)
        .arg("--db")
        .arg(&tables));
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let overall = out.lines().find(|l| l.starts_with("overall")).unwrap();
    assert!(overall.ends_with("1.000"), "{overall}");
    for h in ["easy", "medium", "hard", "extra"] {
        assert!(out.lines().any(|l| l.starts_with(h)), "{out}");
    }
}

#[test]
fn evaluate_writes_report_and_manifest() {
    let (tables, dev) = toy("en");
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    let mut q = gold_queries(&dev);
    q[0] = "SELECT 1".into();
    fs::write(&pred, q.join("\n")).unwrap();
    let out = dir.path().join("out");
    let o = run(bin()
        .args(["evaluate", "--json", "--gold"])
        .arg(&dev)
        .arg("--pred")
        .arg(&pred)
        .arg("--db")
        .arg(&tables)
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["exact"], 19);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report, printed);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);
    assert!(manifest["outputs"]["report.json"].is_string());
}

#[test]
fn usage_errors_exit_one() {
    let o = run(bin().args(["evaluate", "--bogus"]));
    assert_eq!(o.status.code(), Some(1));
    let o = run(bin().args(["stats", "--db", "/does/not/exist.json", "--gold", "/nope.json"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no such file"));
    let o = run(bin().arg("frobnicate"));
    assert_eq!(o.status.code(), Some(1));
    let o = run(bin().arg("--help"));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let (tables, dev) = toy("en");
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    fs::write(&pred, "SELECT 1\n").unwrap();
    let o = run(bin()
        .arg("evaluate")
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(&dev)
        .arg("--pred")
        .arg(&pred));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"[{"db_id": "pets_1", "question": "", "query": "SELECT nothing FROM pets"}]"#).unwrap();
    let o = run(bin().arg("validate").arg("--db").arg(&tables).arg("--gold").arg(&bad));
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("error"));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "[{").unwrap();
    let o = run(bin().arg("stats").arg("--db").arg(&tables).arg("--gold").arg(&broken));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_and_stats_on_toy_corpus() {
    let root = fixtures().join("toy");
    let o = run(bin().arg("stats").arg("--corpus-root").arg(&root).arg("--json"));
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_object().unwrap().len(), 7);
    assert_eq!(v["en"]["questions"], 20);
    assert_eq!(v["en"]["databases"], 3);

    let o = run(bin().arg("validate").arg("--corpus").arg(root.join("ja")).arg("--lang").arg("ja"));
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn backend_errors_exit_three() {
    let (tables, dev) = toy("en");
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .env("MSPIDER_SIDECAR", "http://127.0.0.1:9")
        .arg("augment")
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(&dev)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn missing_backend_is_a_usage_error() {
    let (tables, dev) = toy("en");
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin().arg("augment").arg("--db").arg(&tables).arg("--gold").arg(&dev).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(1));
}

fn t(src: &str, tgt: &str, text: &str, output: &str) -> Value {
    json!({"src": src, "tgt": tgt, "text": text, "output": output})
}

fn e(premise: &str, hypothesis: &str, score: f64) -> Value {
    json!({"lang": "en", "premise": premise, "hypothesis": hypothesis, "score": score})
}

fn write_fixture(dir: &Path) -> PathBuf {
    let dm = "department_management";
    let fx = json!({
        "version": "cli-1",
        "identity_translation": true,
        "translations": [
            t("en", "de", &format!("age of head from ({dm})"), &format!("Alter des Leiters aus ({dm})")),
            t("de", "en", &format!("Alter des Leiters aus ({dm})"), &format!("years of head from ({dm})")),
            t("en", "de", &format!("head from ({dm})"), &format!("Leiter aus ({dm})")),
            t("de", "en", &format!("Leiter aus ({dm})"), &format!("chief from ({dm})")),
            t("en", "de", &format!("singer from (concert_singer)"), "Sänger aus (concert_singer)"),
            t("de", "en", "Sänger aus (concert_singer)", "vocalist from (concert_singer)"),
        ],
        "entailments": [
            e("head age (number)", "head years (number)", 0.91),
            e("head years (number)", "head age (number)", 0.87),
            e("head (table)", "chief (table)", 0.80),
            e("chief (table)", "head (table)", 0.79),
            e("singer (table)", "vocalist (table)", 0.95),
            e("vocalist (table)", "singer (table)", 0.40),
        ]
    });
    let p = dir.join("fx.json");
    fs::write(&p, serde_json::to_string_pretty(&fx).unwrap()).unwrap();
    p
}

fn augment(fx: &Path, out: &Path, extra: &[&str]) -> Output {
    let (tables, dev) = toy("en");
    run(bin()
        .arg("--fixtures")
        .arg(fx)
        .arg("augment")
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(&dev)
        .args(["--seed", "7", "--intermediates", "de", "--rounds", "1"])
        .args(extra)
        .arg("--out")
        .arg(out))
}

fn outputs(dir: &Path) -> Value {
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    m["outputs"].clone()
}

#[test]
fn augment_is_deterministic_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = augment(&fx, &a, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(augment(&fx, &b, &["--jobs", "1"]).status.success());
    assert_eq!(outputs(&a), outputs(&b));
    for f in ["augmented_schema.json", "augment_report.json", "augment_manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let entries: Value = serde_json::from_str(&fs::read_to_string(a.join("augmented_schema.json")).unwrap()).unwrap();
    assert_eq!(entries["department_management"]["head"][0]["synonym"], "chief");
    assert_eq!(entries["department_management"]["head.age"][0]["synonym"], "years");
    assert!(entries.get("concert_singer").is_none());
    let report: Value = serde_json::from_str(&fs::read_to_string(a.join("augment_report.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], 2);
    assert_eq!(report["rejected"], 1);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["backends"][0]["version"], "cli-1");
}

#[test]
fn synthesize_after_augment() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path());
    let aug = dir.path().join("aug");
    assert!(augment(&fx, &aug, &[]).status.success());
    let (tables, dev) = toy("en");
    let synth = |out: &Path| {
        run(bin()
            .arg("synthesize")
            .arg("--db")
            .arg(&tables)
            .arg("--gold")
            .arg(&dev)
            .arg("--augmented")
            .arg(&aug)
            .args(["--seed", "7", "--variants", "2", "--p", "1.0"])
            .arg("--out")
            .arg(out))
    };
    let a = dir.path().join("s1");
    let b = dir.path().join("s2");
    let o = synth(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(synth(&b).status.success());
    assert_eq!(outputs(&a), outputs(&b));

    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["policy"]["replace_probability"], 1.0);
    assert_eq!(manifest["warmup_epochs"], 3);
    assert_eq!(manifest["translator"]["version"], "cli-1");
    // the 7 department_management examples get two variants each
    assert_eq!(manifest["counts"]["variants"], 14);
    assert_eq!(manifest["counts"]["warmup"], 34);

    let finetune = fs::read_to_string(a.join("finetune.json")).unwrap();
    let o = run(bin()
        .arg("validate")
        .arg("--db")
        .arg(a.join("warmup_tables.json"))
        .arg("--gold")
        .arg(a.join("warmup.json")));
    assert!(o.status.success(), "{}", stdout(&o));
    let reparsed: Vec<Value> = serde_json::from_str(&finetune).unwrap();
    assert_eq!(reparsed.len(), 20);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "fixtures = \"fx.json\"\nseed = 3\n[augment]\nrounds = 1\nintermediates = [\"de\"]\n[augment.thresholds]\ndefault = 0.99\n",
    )
    .unwrap();
    let (tables, dev) = toy("en");
    let out = dir.path().join("o");
    let o = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("augment")
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(&dev)
        .args(["--default-threshold", "0.85"])
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("augment_report.json")).unwrap()).unwrap();
    // 0.85 keeps head.age (0.87) only
    assert_eq!(report["accepted"], 1);
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("augment_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config"]["thresholds"]["default"], 0.85);

    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let o = run(bin().arg("--config").arg(&cfg).arg("stats").arg("--db").arg(&tables).arg("--gold").arg(&dev));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn prep_zeroshot_keeps_sql_and_ids() {
    let dir = tempfile::tempdir().unwrap();
    let zs = fixtures().join("zeroshot");
    let (tables, _) = toy("en");
    let out = dir.path().join("ja");
    let o = run(bin()
        .arg("--fixtures")
        .arg(zs.join("en_ja_fixture.json"))
        .args(["prep-zeroshot", "--mode", "translate_then_train", "--target", "ja", "--split", "train"])
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(zs.join("train.json"))
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let before: Vec<Value> = serde_json::from_str(&fs::read_to_string(zs.join("train.json")).unwrap()).unwrap();
    let after: Vec<Value> = serde_json::from_str(&fs::read_to_string(out.join("examples.json")).unwrap()).unwrap();
    assert_eq!(before.len(), 100);
    for (a, b) in before.iter().zip(&after) {
        assert_eq!(a["query"], b["query"]);
        assert_eq!(a["example_id"], b["example_id"]);
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["job"]["mode"], "translate_then_train");
    assert_eq!(m["flags"].as_array().unwrap().len(), 0);
    assert!(out.join("run.json").exists());

    let o = run(bin()
        .args(["prep-zeroshot", "--mode", "translate_then_predict", "--target", "fr", "--lang", "de"])
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(zs.join("train.json"))
        .arg("--out")
        .arg(dir.path().join("x")));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn directly_predict_needs_no_backend() {
    let (tables, dev) = toy("de");
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["prep-zeroshot", "--mode", "directly_predict", "--lang", "de"])
        .arg("--db")
        .arg(&tables)
        .arg("--gold")
        .arg(&dev)
        .arg("--out")
        .arg(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(m["backend"].is_null());
}

#[test]
fn hardness_and_link_score() {
    let (tables, dev) = toy("en");
    let o = run(bin().arg("hardness").arg("--json").arg("--db").arg(&tables).arg("--gold").arg(&dev));
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let total: u64 = v["counts"].as_object().unwrap().values().map(|n| n.as_u64().unwrap()).sum();
    assert_eq!(total, 20);

    let o = run(bin().arg("link-score").arg("--corpus-root").arg(fixtures().join("toy")).args(["--langs", "en,zh"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("en") && out.contains("zh"));
}
