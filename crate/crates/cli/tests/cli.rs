use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use odhyp_core::hypotheses::CountsReport;
use odhyp_core::matching::MatchStats;
use odhyp_core::pipeline::{self, PipelineConfig, RunManifest};
use odhyp_core::ranking::{DISTRIBUTIONS_HEADER, RANKING_HEADER};
use odhyp_core::synth::Evaluation;
use odhyp_core::{Hypothesis, Match};
use serde_json::Value;

fn odhyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odhyp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error record");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {stderr}"))
}

fn write_config(path: &Path, value: Value) {
    fs::write(path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
}

/// A 60-dataset synthetic corpus under `root/data`.
fn synth_corpus(root: &Path) -> PathBuf {
    let cfg = root.join("synth.json");
    write_config(
        &cfg,
        serde_json::json!({
            "synth": {
                "n_base": 44, "duplicates": 5, "version_chains": 3,
                "partition_groups": 2, "partition_group_size": 4,
                "join_pairs": 3, "similar_domain_groups": 2, "simple_relation_groups": 2
            }
        }),
    );
    let data = root.join("data");
    let out = odhyp(&["synth", "--config", cfg.to_str().unwrap(), "--output", data.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

fn pipeline_config(root: &Path, data: &Path, out: &str) -> PathBuf {
    let cfg = root.join(format!("{out}.json"));
    write_config(
        &cfg,
        serde_json::json!({
            "corpus_dir": data.join("corpus"),
            "output_dir": root.join(out),
        }),
    );
    cfg
}

fn csv_header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn pipeline_on_a_small_synthetic_corpus() {
    let root = tempfile::tempdir().unwrap();
    let data = synth_corpus(root.path());
    assert_eq!(fs::read_dir(data.join("corpus")).unwrap().count(), 120);
    assert!(data.join(pipeline::GROUND_TRUTH).is_file());

    let cfg = pipeline_config(root.path(), &data, "out");
    let out = odhyp(&["pipeline", "--config", cfg.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.path().join("out");

    let matches: Vec<Match> = odhyp_core::io::read_jsonl(&dir.join(pipeline::MATCHES)).unwrap();
    assert!(!matches.is_empty());
    let stats: MatchStats = odhyp_core::io::read_json(&dir.join(pipeline::STATS)).unwrap();
    assert_eq!(stats.datasets, 60);
    assert_eq!(stats.pairs_examined, 60 * 59 / 2);
    assert_eq!(stats.total_edges, matches.len());
    let hyps: Vec<Hypothesis> = odhyp_core::io::read_jsonl(&dir.join(pipeline::HYPOTHESES)).unwrap();
    assert!(!hyps.is_empty());
    for h in &hyps {
        h.validate().unwrap();
    }
    assert_eq!(csv_header(&dir.join(pipeline::COUNTS)), CountsReport::HEADER);
    assert_eq!(csv_header(&dir.join(pipeline::RANKING)), RANKING_HEADER);
    assert_eq!(csv_header(&dir.join(pipeline::DISTRIBUTIONS)), DISTRIBUTIONS_HEADER);
    assert_eq!(csv_header(&dir.join(pipeline::EVALUATION)), Evaluation::HEADER);
    let ranking_rows = csv::Reader::from_path(dir.join(pipeline::RANKING)).unwrap().records().count();
    assert_eq!(ranking_rows, hyps.len());

    // No staging directories survive.
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");

    let manifest: RunManifest = odhyp_core::io::read_json(&dir.join(pipeline::MANIFEST)).unwrap();
    assert_eq!(manifest.config.worker_count, Some(2));
    let produced: Vec<&str> = manifest.outputs.iter().map(|o| o.name.as_str()).collect();
    for name in [
        pipeline::FILTERED,
        pipeline::MATCHES,
        pipeline::STATS,
        pipeline::HYPOTHESES,
        pipeline::COUNTS,
        pipeline::RANKING,
        pipeline::DISTRIBUTIONS,
        pipeline::EVALUATION,
    ] {
        assert!(produced.contains(&name), "{name} missing from manifest");
    }
    let inputs: Vec<&str> = manifest.inputs.iter().map(|i| i.name.as_str()).collect();
    assert_eq!(inputs, ["corpus", pipeline::GROUND_TRUTH]);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let root = tempfile::tempdir().unwrap();
    let data = synth_corpus(root.path());
    let mut runs = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let cfg = pipeline_config(root.path(), &data, "out");
        let out = odhyp(&["pipeline", "--config", cfg.to_str().unwrap(), "--workers", workers]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let dir = root.path().join("out");
        let files = read_all(&dir);
        fs::rename(&dir, root.path().join(name)).unwrap();
        runs.push(files);
    }
    // Identical config: everything identical, manifest included.
    assert_eq!(runs[0], runs[2]);
    // Only the manifest records the worker count.
    let strip = |m: &BTreeMap<String, Vec<u8>>| {
        let mut m = m.clone();
        m.remove(pipeline::MANIFEST);
        m
    };
    assert_eq!(strip(&runs[0]), strip(&runs[1]));
}

#[test]
fn rank_without_detect_names_the_missing_file() {
    let root = tempfile::tempdir().unwrap();
    let data = synth_corpus(root.path());
    let cfg = pipeline_config(root.path(), &data, "out");
    let out = odhyp(&["rank", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["kind"], "missing_input");
    assert_eq!(rec["command"], "rank");
    assert!(rec["message"].as_str().unwrap().contains("hypotheses.jsonl"), "{rec}");
    // Nothing from the failed stage is left behind.
    let dir = root.path().join("out");
    assert!(!dir.join(pipeline::RANKING).exists());
    assert_eq!(fs::read_dir(&dir).map(|d| d.count()).unwrap_or(0), 0);
}

#[test]
fn corrupt_stage_input_is_a_data_error() {
    let root = tempfile::tempdir().unwrap();
    let data = synth_corpus(root.path());
    let cfg = pipeline_config(root.path(), &data, "out");
    let dir = root.path().join("out");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(pipeline::MATCHES), "{\"kind\": 3}\n").unwrap();
    let out = odhyp(&["detect", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["kind"], "record");
    assert!(!dir.join(pipeline::HYPOTHESES).exists());
    assert!(!dir.join(pipeline::COUNTS).exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let root = tempfile::tempdir().unwrap();
    for args in [
        vec!["pipeline", "--bogus"],
        vec!["frobnicate"],
        vec!["rank", "--strategy", "most-lucky"],
        vec!["pipeline", "--config", "/nonexistent/odhyp.json"],
        vec!["match", "--workers", "0"],
    ] {
        let out = odhyp(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(error_record(&out)["status"], "error");
    }
    let bad = root.path().join("bad.json");
    write_config(&bad, serde_json::json!({"matching": {"tau_attr": 1.5}}));
    let out = odhyp(&["match", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["kind"], "config");
}

#[test]
fn help_exits_cleanly() {
    let out = odhyp(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("pipeline"));
}

/// Every key of the default config appears, with a value, in the manifest.
#[test]
fn manifest_records_every_default() {
    fn keys(v: &Value, prefix: &str, out: &mut Vec<String>) {
        if let Value::Object(map) = v {
            for (k, child) in map {
                let path = format!("{prefix}{k}");
                out.push(path.clone());
                keys(child, &format!("{path}."), out);
            }
        }
    }
    let root = tempfile::tempdir().unwrap();
    let data = synth_corpus(root.path());
    let cfg = pipeline_config(root.path(), &data, "out");
    let out = odhyp(&["ingest", "--config", cfg.to_str().unwrap(), "--strategy", "most-uncertain"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(root.path().join("out").join(pipeline::MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ingest");
    assert_eq!(manifest["config"]["ranking"]["strategy"], "most_uncertain");

    let (mut want, mut got) = (Vec::new(), Vec::new());
    keys(&serde_json::to_value(PipelineConfig::default()).unwrap(), "", &mut want);
    keys(&manifest["config"], "", &mut got);
    assert_eq!(want, got);
}
