mod common;

use std::path::Path;
use std::process::Command;

use reasoneval::config::Config;
use reasoneval::emit::{emit_report, report_csv, report_svg, Format};
use reasoneval::manifest::Manifest;
use reasoneval::report::{RunMode, RunReport, Stage};
use reasoneval::runner::{Retrieval, Runner};
use reasoneval::synth::write_synthetic_dataset;
use reasoneval_core::kb::{build_index, clean_corpus, ingest_corpus, BuiltinCleaner, BuiltinEmbedder, Cleaner, KnowledgeBase, LabelVocabulary, Strategy};
use reasoneval_core::limits::NormalLimits;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(common::bin()).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn kb(dir: &Path) -> KnowledgeBase {
    let map = common::write_corpus(&dir.join("corpus"));
    let ing = ingest_corpus(&dir.join("corpus"), &map, &LabelVocabulary::builtin()).unwrap();
    let cleaner = BuiltinCleaner::new(&NormalLimits::default());
    let cleaners: [&dyn Cleaner; 1] = [&cleaner];
    let out = clean_corpus(&ing.articles, &[Strategy::ExactQuote], &cleaners);
    build_index(out.entries, &BuiltinEmbedder::default()).unwrap()
}

fn eval(manifest: &Manifest, kb: &KnowledgeBase, workers: usize) -> RunReport {
    let cfg = Config { seed: 3, ..Config::default() };
    let assets = cfg.assets().unwrap();
    let emb = BuiltinEmbedder::default();
    let runner = Runner { config: &cfg, assets: &assets, retrieval: Some(Retrieval { kb, embedder: &emb }), workers };
    runner.run(RunMode::Eval, manifest)
}

#[test]
fn cli_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = |p: &str| d.join(p).to_string_lossy().into_owned();
    let map = common::write_corpus(&d.join("corpus"));
    common::write_label_map(&d.join("map.json"), &map);

    assert_eq!(run(&["synth", "--n", "6", "--seed", "40", "--out", &s("data")]).0, 0);
    let (code, stdout) = run(&["kb", "build", "--corpus", &s("corpus"), "--label-map", &s("map.json"), "--out", &s("kb")]);
    assert_eq!(code, 0);
    let built: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(built["articles"], 66);

    let (code, stdout) = run(&["kb", "query", "--kb", &s("kb"), "--text", "sawtooth flutter waves at 300 per minute", "-k", "3"]);
    assert_eq!(code, 0);
    let hits: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(hits[0]["label"], "atrial flutter");

    let m = s("data/manifest.jsonl");
    assert_eq!(run(&["eval", "--manifest", &m, "--kb", &s("kb"), "--out", &s("eval"), "--workers", "2"]).0, 0);
    let report = RunReport::load(&d.join("eval/report.json")).unwrap();
    assert_eq!(report.traces.len(), 6);
    assert_eq!(report.aggregates.overall.acc_at_thresh_100.value, Some(1.0));

    assert_eq!(run(&["assess-supporting", "--manifest", &m, "--out", &s("sup"), "--format", "json"]).0, 0);
    assert_eq!(run(&["assess-adversarial", "--manifest", &m, "--flip", "all", "--seed", "9", "--out", &s("adv")]).0, 0);
    let adv = RunReport::load(&d.join("adv/report.json")).unwrap();
    assert_eq!(adv.aggregates.overall.acc_at_thresh_100.value, Some(0.0));
    assert!(adv.traces.iter().all(|t| !t.flips.is_empty()));

    assert_eq!(run(&["split", "--manifest", &m, "--ratio", "0.5", "--seed", "1", "--out", &s("split")]).0, 0);
    let val = Manifest::load(&d.join("split/val.jsonl")).unwrap();
    let test = Manifest::load(&d.join("split/test.jsonl")).unwrap();
    assert_eq!(val.rows.len() + test.rows.len(), 6);

    assert_eq!(run(&["report", "--input", &s("eval/report.json"), "--out", &s("re"), "--format", "csv"]).0, 0);
    assert_eq!(std::fs::read_to_string(d.join("re/report.csv")).unwrap(), std::fs::read_to_string(d.join("eval/report.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = |p: &str| d.join(p).to_string_lossy().into_owned();
    std::fs::write(d.join("bad.json"), r#"{"ks": [0]}"#).unwrap();
    std::fs::write(d.join("m.jsonl"), r#"{"trace_id":"a","record_path":"missing.csv","reasoning_trace":"QRS is wide."}"#).unwrap();

    assert_eq!(run(&["assess-supporting", "--manifest", &s("m.jsonl"), "--config", &s("bad.json"), "--out", &s("o")]).0, 2);
    assert_eq!(run(&["assess-supporting", "--manifest", &s("nope.jsonl"), "--out", &s("o")]).0, 2);
    assert_eq!(run(&["eval", "--manifest", &s("m.jsonl"), "--out", &s("o")]).0, 2);
    assert_eq!(run(&["split", "--manifest", &s("m.jsonl"), "--ratio", "1.5", "--out", &s("o")]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
    assert_eq!(run(&["assess-supporting", "--manifest", &s("m.jsonl"), "--out", &s("o")]).0, 3);
    let r = RunReport::load(&d.join("o/report.json")).unwrap();
    assert_eq!(r.aggregates.failures.by_stage.get(&Stage::Record), Some(&1));
}

#[test]
fn failure_in_one_row_stays_in_that_row() {
    let tmp = tempfile::tempdir().unwrap();
    let kb = kb(tmp.path());
    let path = write_synthetic_dataset(&tmp.path().join("data"), 6, 70).unwrap();
    let clean = Manifest::load(&path).unwrap();
    let mut broken = clean.clone();
    broken.rows[2].record_path = "records/missing.bin".into();
    let a = eval(&clean, &kb, 2);
    let b = eval(&broken, &kb, 2);
    assert_eq!(b.aggregates.failures.total, 1);
    for (x, y) in a.traces.iter().zip(&b.traces) {
        if x.trace_id == clean.rows[2].trace_id {
            assert_eq!(y.failure.as_ref().unwrap().stage, Stage::Record);
            assert!(y.perception.is_none());
        } else {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn emitted_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let kb = kb(tmp.path());
    let path = write_synthetic_dataset(&tmp.path().join("data"), 6, 90).unwrap();
    let mut m = Manifest::load(&path).unwrap();
    m.rows.retain(|r| r.model_tag != "model-c");
    let report = eval(&m, &kb, 1);

    let csv = report_csv(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("model_tag,task,"));

    let svg = report_svg(&report);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let groups: Vec<&str> = doc.descendants().filter(|n| n.has_tag_name("g")).filter_map(|n| n.attribute("data-model")).collect();
    assert_eq!(groups, vec!["model-a", "model-b"]);

    let out = tmp.path().join("out");
    let files = emit_report(&report, &out, &[Format::Json, Format::Csv, Format::Svg]).unwrap();
    assert_eq!(files.len(), 3);
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let back = RunReport::from_json(&text).unwrap();
    assert_eq!(
        serde_json::to_string(&back.aggregates).unwrap(),
        serde_json::to_string(&reasoneval::report::Aggregates::compute(&back.traces, &back.config.ks)).unwrap()
    );
    assert_eq!(back.to_json(), text);

    let blocked = tmp.path().join("file");
    std::fs::write(&blocked, "x").unwrap();
    assert!(emit_report(&report, &blocked.join("sub"), &[Format::Json]).is_err());
}
