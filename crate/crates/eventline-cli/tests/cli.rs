use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn eventline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventline"))
        .arg("run")
        .args(args)
        .output()
        .unwrap()
}

fn running(mode: &str, extra: &[&str]) -> Output {
    let rules = fixture("running_example/nonpersistent.tes");
    let data = fixture("running_example/data.facts");
    let mut args = vec![
        "--rules",
        rules.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--mode",
        mode,
    ];
    args.extend_from_slice(extra);
    eventline(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn consistent_mode_lists_four_models() {
    let out = running("consistent", &[]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["mode"], "consistent");
    assert_eq!(doc["exhaustive"], true);
    assert_eq!(doc["models"].as_array().unwrap().len(), 4);
}

#[test]
fn preferred_mode_gives_the_confident_repair() {
    let out = running("preferred", &[]);
    assert_eq!(out.status.code(), Some(0));
    let models = json(&out)["models"].clone();
    let simple = models[0]["simple"].as_array().unwrap();
    let spans: Vec<(u64, u64, u64)> = simple
        .iter()
        .map(|f| {
            (
                f["interval"]["start"].as_u64().unwrap(),
                f["interval"]["end"].as_u64().unwrap(),
                f["level"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(models.as_array().unwrap().len(), 1);
    assert_eq!(spans, [(2, 4, 1), (9, 9, 1)]);
}

#[test]
fn output_is_deterministic() {
    let a = running("consistent", &[]).stdout;
    let b = running("consistent", &[]).stdout;
    assert_eq!(a, b);
}

#[test]
fn check_mode_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let naive = dir.path().join("naive.json");
    let out = running("naive", &["--out", naive.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let check = running("check", &["--check", naive.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(3));
    assert_eq!(json(&check)["recognized"], false);

    let preferred = dir.path().join("preferred.json");
    running("preferred", &["--out", preferred.to_str().unwrap()]);
    let check = running(
        "check",
        &["--check", preferred.to_str().unwrap(), "--check-kind", "preferred"],
    );
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(json(&check)["recognized"], true);
}

#[test]
fn naive_timeline_of_a_consistent_instance_is_recognized() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.json");
    let base = [
        "--rules".to_owned(),
        fixture("csv_ingest/therapy.tes").to_str().unwrap().to_owned(),
        "--data".to_owned(),
        fixture("csv_ingest/drugs.facts").to_str().unwrap().to_owned(),
        "--data".to_owned(),
        fixture("csv_ingest/admissions.csv").to_str().unwrap().to_owned(),
        "--map".to_owned(),
        fixture("csv_ingest/admissions.map").to_str().unwrap().to_owned(),
    ];
    let base: Vec<&str> = base.iter().map(String::as_str).collect();
    let mut args = base.clone();
    args.extend(["--mode", "naive", "--out", target.to_str().unwrap()]);
    assert_eq!(eventline(&args).status.code(), Some(0));
    let mut args = base;
    args.extend(["--mode", "check", "--check", target.to_str().unwrap()]);
    let out = eventline(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cap_exceeded_exits_with_two() {
    let out = running("consistent", &["--cap", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["exhaustive"], false);
}

#[test]
fn bad_rules_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("bad.tes");
    std::fs::write(&rules, "decl persistent E/0.\nexists(E, T, 1) :- Nope(T).\n").unwrap();
    let data = fixture("running_example/data.facts");
    let out = eventline(&[
        "--rules",
        rules.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.tes"));
}

#[test]
fn csv_without_map_is_rejected() {
    let out = eventline(&[
        "--rules",
        fixture("csv_ingest/therapy.tes").to_str().unwrap(),
        "--data",
        fixture("csv_ingest/admissions.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn partitions_by_entity() {
    let out = eventline(&[
        "--rules",
        fixture("clinical/antibiotics.tes").to_str().unwrap(),
        "--data",
        fixture("clinical/patients.facts").to_str().unwrap(),
        "--mode",
        "preferred",
        "--partition-by",
        "0",
        "--now",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let parts = doc["partitions"].as_object().unwrap();
    assert_eq!(parts.keys().collect::<Vec<_>>(), ["p1", "p2"]);
    assert_eq!(parts["p1"]["models"].as_array().unwrap().len(), 2);
}

#[test]
fn tsv_output() {
    let out = running("naive", &["--format", "tsv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("entity\tmodel\tkind\tpred\targs\tstart\tend\tlevel"));
    assert_eq!(lines.count(), 4);
}
