mod common;

use std::fs;

use common::{aas, build_mini, code, fixture, stderr};
use serde_json::Value;

#[test]
fn unknown_flag_is_usage_error() {
    let out = aas(&["eval", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert_eq!(code(&aas(&["frobnicate"])), 1);
    assert_eq!(code(&aas(&["--help"])), 0);
}

#[test]
fn eval_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = aas(&[
        "eval",
        "--dataset",
        &fixture("golden/questions.json"),
        "--aas",
        &fixture("golden/aas.jsonl"),
        "--predictions",
        &fixture("golden/predictions.jsonl"),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["n_questions"], 500);
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("report.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "eval");
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);
    let digest = manifest["outputs"][report.to_str().unwrap()]
        .as_str()
        .unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn offline_build_with_cold_cache_names_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = build_mini(
        &dir.path().join("aas.jsonl"),
        &["--cache-dir", dir.path().join("cold").to_str().unwrap()],
    );
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    for label in ["batter", "road", "teddy bear", "women"] {
        assert!(err.contains(label), "{err}");
    }
    assert!(!dir.path().join("aas.jsonl").exists());
}

#[test]
fn data_and_resource_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"question_id\": \"1\"}\n").unwrap();
    let report = dir.path().join("r.json");
    let run = |preds: &str| {
        aas(&[
            "eval",
            "--dataset",
            &fixture("golden/questions.json"),
            "--aas",
            &fixture("golden/aas.jsonl"),
            "--predictions",
            preds,
            "--out",
            report.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&run(bad.to_str().unwrap())), 2);
    assert_eq!(
        code(&run(dir.path().join("missing.jsonl").to_str().unwrap())),
        3
    );
    let unknown = dir.path().join("unknown.jsonl");
    fs::write(
        &unknown,
        "{\"question_id\": \"nope\", \"answer\": \"cat\"}\n",
    )
    .unwrap();
    let out = run(unknown.to_str().unwrap());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope"));
}

fn artifact_k(path: &std::path::Path) -> u64 {
    let first = fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let header: Value = serde_json::from_str(&first).unwrap();
    header["metadata"]["k"].as_u64().unwrap()
}

#[test]
fn flag_beats_config_file_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    assert_eq!(code(&build_mini(&a, &[])), 0);
    assert_eq!(artifact_k(&a), 6, "value from the config file");
    let b = dir.path().join("b.jsonl");
    assert_eq!(code(&build_mini(&b, &["--k", "3"])), 0);
    assert_eq!(artifact_k(&b), 3, "flag wins");
    for line in fs::read_to_string(&b).unwrap().lines().skip(1) {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(rec["members"].as_array().unwrap().len() <= 3);
    }
}

#[test]
fn per_source_artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aas.jsonl");
    assert_eq!(
        code(&build_mini(&out, &["--sources", "wordnet,bert-vec"])),
        0
    );
    assert!(dir.path().join("aas.wordnet.jsonl").is_file());
    assert!(dir.path().join("aas.bert-vec.jsonl").is_file());
    assert!(!dir.path().join("aas.conceptnet.jsonl").exists());
    let header: Value = serde_json::from_str(
        fs::read_to_string(dir.path().join("aas.wordnet.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(header["metadata"]["restricted_to"], "wordnet");
    assert_eq!(header["metadata"]["wordnet"]["version"], "3.0");
    assert!(!dir.path().join("aas.jsonl.checkpoint").exists());
}

#[test]
fn recorded_scores_replay_through_the_table_backend() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live.jsonl");
    let table = dir.path().join("scores.tsv");
    assert_eq!(
        code(&build_mini(
            &live,
            &["--record-table", table.to_str().unwrap()]
        )),
        0
    );
    let replay = dir.path().join("replay.jsonl");
    let out = build_mini(
        &replay,
        &[
            "--backend",
            "table",
            "--score-table",
            table.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let body = |p: &std::path::Path| {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&live), body(&replay));

    // A table that lacks a needed pair is a missing resource.
    fs::write(&table, "").unwrap();
    let out = build_mini(
        &dir.path().join("x.jsonl"),
        &[
            "--backend",
            "table",
            "--score-table",
            table.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn backend_url_comes_from_environment_when_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = build_mini(&dir.path().join("a.jsonl"), &["--backend", "http"]);
    assert_eq!(code(&out), 1, "no URL anywhere: {}", stderr(&out));
    // Nothing listens on port 9 of localhost; the URL is picked up and the
    // service is reported unavailable.
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_aas"))
        .args([
            "--config",
            &fixture("mini/build.toml"),
            "build",
            "--dataset",
            &fixture("mini/questions.json"),
        ])
        .args([
            "--out",
            dir.path().join("b.jsonl").to_str().unwrap(),
            "--backend",
            "http",
        ])
        .env("AAS_BACKEND_URL", "http://127.0.0.1:9")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("127.0.0.1:9"));
}

#[test]
fn ksweep_rejects_artifact_built_with_small_k() {
    let dir = tempfile::tempdir().unwrap();
    let built = dir.path().join("aas.jsonl");
    assert_eq!(code(&build_mini(&built, &[])), 0);
    let preds = fixture("mini/predictions.jsonl");
    let out = aas(&[
        "ksweep",
        "--dataset",
        &fixture("mini/questions.json"),
        "--aas",
        built.to_str().unwrap(),
        "--predictions",
        &preds,
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("k=6"), "{}", stderr(&out));
}

#[test]
fn augment_exports_normalized_targets_in_question_order() {
    let dir = tempfile::tempdir().unwrap();
    let built = dir.path().join("aas.jsonl");
    assert_eq!(code(&build_mini(&built, &[])), 0);
    for mode in ["score", "uniform"] {
        let targets = dir.path().join(format!("{mode}.jsonl"));
        let out = aas(&[
            "augment",
            "--dataset",
            &fixture("mini/questions.json"),
            "--aas",
            built.to_str().unwrap(),
            "--vocab",
            &fixture("mini/vocab.txt"),
            "--mode",
            mode,
            "--out",
            targets.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let mut last = 0u64;
        for line in fs::read_to_string(&targets).unwrap().lines() {
            let t: Value = serde_json::from_str(line).unwrap();
            let id: u64 = t["question_id"].as_str().unwrap().parse().unwrap();
            assert!(id > last);
            last = id;
            let total: f64 = t["targets"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p[1].as_f64().unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn premises_lists_matching_questions() {
    let out = aas(&[
        "premises",
        "--dataset",
        &fixture("mini/questions.json"),
        "--label",
        "Road",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        v["premises"],
        serde_json::json!(["who is on the road?", "is the road wet?"])
    );
    let out = aas(&[
        "premises",
        "--dataset",
        &fixture("mini/questions.json"),
        "--label",
        "yes",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["fallback"], true);
    assert_eq!(
        v["premises"],
        serde_json::json!(["there is a yes in the picture."])
    );
}

#[test]
fn ingest_round_trips_a_gqa_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("q.json");
    let out = aas(&[
        "ingest",
        "--dataset",
        &fixture("mini/questions.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("44 questions, 20 unique answers"));
    let a: Value =
        serde_json::from_str(&fs::read_to_string(fixture("mini/questions.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(a, b);
}
