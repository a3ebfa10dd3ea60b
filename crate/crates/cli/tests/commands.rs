mod support;

use std::fs;

use bxaic_cli::exit;
use serde_json::Value;
use support::*;
use tempfile::TempDir;

fn label_json(smiles: &str) -> Value {
    serde_json::from_str(&ok(&bxaic(&[
        "label", "--smiles", smiles, "--format", "json",
    ])))
    .unwrap()
}

#[test]
fn label_examples() {
    let v = label_json("C1CCCCCC1");
    assert_eq!(v["tasks"]["rings-max"]["label"], true);
    assert_eq!(v["tasks"]["rings-count"]["label"], false);

    let v = label_json("B");
    assert_eq!(v["tasks"]["B"]["label"], true);
    for t in ["P", "X", "indole", "PAINS", "rings-count", "rings-max"] {
        assert_eq!(v["tasks"][t]["label"], false, "{t}");
    }

    let text = ok(&bxaic(&["label", "--smiles", "CCF"]));
    assert!(text
        .lines()
        .any(|l| l.starts_with("X ") && l.contains("subgraph") && l.contains(" 2 ")));

    let out = bxaic(&["label", "--smiles", "C1CC"]);
    assert_eq!(out.status.code(), Some(exit::PARSE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ring closure"));
}

#[test]
fn pattern_directory_override() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("pains.txt"),
        "# format_version=1\nketone\t[C;D3](=O)([#6])[#6]\n",
    )
    .unwrap();
    let out = bxaic_env(
        &["label", "--smiles", "CC(=O)C", "--format", "json"],
        &[("BXAIC_PATTERN_DIR", p(dir.path()))],
    );
    let v: Value = serde_json::from_str(&ok(&out)).unwrap();
    assert_eq!(v["tasks"]["PAINS"]["label"], true);
    assert_eq!(
        v["tasks"]["PAINS"]["atom_mask"],
        serde_json::json!([1, 1, 1, 1])
    );
    assert_eq!(label_json("CC(=O)C")["tasks"]["PAINS"]["label"], false);

    let empty = TempDir::new().unwrap();
    let out = bxaic_env(
        &["label", "--smiles", "C"],
        &[("BXAIC_PATTERN_DIR", p(empty.path()))],
    );
    assert_eq!(out.status.code(), Some(exit::PATTERNS));
}

#[test]
fn build_writes_all_artifacts_and_matches_frozen_stats() {
    let dir = TempDir::new().unwrap();
    build_fixture(dir.path());
    for f in [
        "dataset.jsonl",
        "train.txt",
        "valid.txt",
        "test.txt",
        "stats.json",
        "diagnostics.jsonl",
        "build.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("stats.json")).unwrap(),
        fs::read_to_string(fixture("stats_corpus_1000_seed42.json")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("dataset.jsonl"))
            .unwrap()
            .lines()
            .count(),
        995
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("diagnostics.jsonl"))
            .unwrap()
            .lines()
            .count(),
        5
    );
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".bxaic-"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn build_errors() {
    let dir = TempDir::new().unwrap();
    let nine = dir.path().join("nine.smi");
    fs::write(&nine, "C\nCC\nCCC\nCCCC\nCCCCC\nCCO\nCCN\nCCF\nc1ccccc1\n").unwrap();
    let out = bxaic(&[
        "build",
        "--input",
        p(&nine),
        "--out",
        p(&dir.path().join("o")),
        "--seed",
        "1",
        "--size",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(exit::DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("50"));

    let junk = dir.path().join("junk.smi");
    fs::write(&junk, "C1CC\nN(\n").unwrap();
    let out = bxaic(&[
        "build",
        "--input",
        p(&junk),
        "--out",
        p(&dir.path().join("o2")),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(exit::DATA));

    let out = bxaic(&[
        "build",
        "--input",
        p(&dir.path().join("missing.smi")),
        "--out",
        p(dir.path()),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(exit::IO));

    let out = bxaic(&["build", "--input", p(&nine), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
    let out = bxaic(&[
        "build",
        "--input",
        p(&nine),
        "--out",
        p(dir.path()),
        "--seed",
        "1",
        "--split",
        "8:1",
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
}

fn small_dataset(dir: &std::path::Path) -> std::path::PathBuf {
    let corpus = dir.join("small.smi");
    fs::write(
        &corpus,
        "CC(C)C iso\nc1ccc2[nH]ccc2c1 indole\nCCF fluoro\nB boron\nC1CCCCCC1 ring7\nOP(=O)(O)O phos\n\
         CCCCCC hexane\nCCOC(=O)c1ccccc1 ester\nNCCO amine\nClC(Cl)Cl chloroform\nC1CC2CCC1C2 bicyclic\n",
    )
    .unwrap();
    let out = dir.join("ds");
    ok(&bxaic(&[
        "build",
        "--input",
        p(&corpus),
        "--out",
        p(&out),
        "--seed",
        "5",
    ]));
    out.join("dataset.jsonl")
}

#[test]
fn baseline_methods() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    ok(&bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "random",
        "--seed",
        "9",
        "--out",
        p(&a),
    ]));
    ok(&bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "random",
        "--seed",
        "9",
        "--out",
        p(&b),
    ]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let deg = dir.path().join("deg.jsonl");
    ok(&bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "degree",
        "--out",
        p(&deg),
    ]));
    let first: Value =
        serde_json::from_str(fs::read_to_string(&deg).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], "iso");
    assert_eq!(
        first["node_scores"],
        serde_json::json!([1.0, 3.0, 1.0, 1.0])
    );

    let out = bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "saliency",
        "--out",
        p(&a),
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
    let out = bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "random",
        "--out",
        p(&a),
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
    let out = bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "oracle",
        "--out",
        p(&ds),
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
}

#[test]
fn eval_reports_schema_and_data_errors() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let attr = dir.path().join("o.jsonl");
    ok(&bxaic(&[
        "baseline",
        "--dataset",
        p(&ds),
        "--method",
        "oracle",
        "--out",
        p(&attr),
    ]));
    let text = fs::read_to_string(&attr).unwrap();
    let report = dir.path().join("r.json");

    let truncated = dir.path().join("truncated.jsonl");
    let mut lines: Vec<&str> = text.lines().collect();
    let cut = &lines[4][..lines[4].len() / 2];
    lines[4] = cut;
    fs::write(&truncated, lines.join("\n")).unwrap();
    let out = bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&truncated),
        "--out",
        p(&report),
    ]);
    assert_eq!(out.status.code(), Some(exit::SCHEMA));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 5"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!report.exists());

    let unknown = dir.path().join("unknown.jsonl");
    fs::write(
        &unknown,
        text.replacen("\"id\":\"iso\"", "\"id\":\"nope\"", 1),
    )
    .unwrap();
    let out = bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&unknown),
        "--out",
        p(&report),
    ]);
    assert_eq!(out.status.code(), Some(exit::DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));

    let short = dir.path().join("short.jsonl");
    fs::write(
        &short,
        text.replacen("[0.0,0.0,0.0,0.0]", "[0.0,0.0,0.0]", 1),
    )
    .unwrap();
    let out = bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&short),
        "--out",
        p(&report),
    ]);
    assert_eq!(out.status.code(), Some(exit::DATA));

    let out = bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&attr),
        "--out",
        p(&report),
        "--alpha",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));
    let out = bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&attr),
        "--out",
        p(&report),
        "--quartile-rule",
        "type9",
    ]);
    assert_eq!(out.status.code(), Some(exit::USAGE));

    let before = fs::read(&attr).unwrap();
    ok(&bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&attr),
        "--out",
        p(&report),
        "--quartile-rule",
        "nearest",
    ]));
    assert_eq!(fs::read(&attr).unwrap(), before);
    let doc = read_json(&report);
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["alpha"], 0.05);
    assert_eq!(doc["config"]["ne"]["quartile_rule"], "nearest");
    assert!(doc.get("per_graph").is_none());
    for s in doc["scores"].as_array().unwrap() {
        if !s["se"].is_null() {
            assert_eq!(s["se"]["mean"], 1.0);
        }
    }
}

/// Files shaped like the reference adapter's exports: no version field,
/// edge scores aligned with the dataset's bond list, predictions with
/// probabilities. Constant (all-zero) saliency must still validate.
#[test]
fn adapter_export_files_pass_eval() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let records: Vec<Value> = fs::read_to_string(&ds)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut attr = String::new();
    let mut preds = String::new();
    for r in &records {
        let n = r["atoms"].as_u64().unwrap() as usize;
        let nb = r["bonds"].as_array().unwrap().len();
        for task in ["B", "indole"] {
            let mask = &r["tasks"][task]["atom_mask"];
            let nodes: Vec<f64> = (0..n)
                .map(|i| mask[i].as_f64().unwrap() * 0.731 + 0.01)
                .collect();
            let edges = if task == "indole" {
                serde_json::json!(vec![0.0f32; nb])
            } else {
                Value::Null
            };
            attr.push_str(&serde_json::json!({"id": r["id"], "task": task, "node_scores": nodes, "edge_scores": edges}).to_string());
            attr.push('\n');
            let prob = if r["tasks"][task]["label"] == true {
                0.93
            } else {
                0.04
            };
            preds.push_str(
                &serde_json::json!({"id": r["id"], "task": task, "prob": prob}).to_string(),
            );
            preds.push('\n');
        }
    }
    let (a, pr, out) = (
        dir.path().join("sal.jsonl"),
        dir.path().join("pred.jsonl"),
        dir.path().join("rep.json"),
    );
    fs::write(&a, attr).unwrap();
    fs::write(&pr, preds).unwrap();
    ok(&bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&a),
        "--predictions",
        p(&pr),
        "--out",
        p(&out),
    ]));
    let doc = read_json(&out);
    let f1: Vec<&Value> = doc["f1"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["task"] == "B")
        .collect();
    assert_eq!(f1[0]["f1"], 1.0);
    let skipped: Vec<String> = doc["skipped"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["task"].to_string())
        .collect();
    assert!(skipped.iter().any(|t| t.contains("PAINS")));
    let edge_indole = doc["scores"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["task"] == "indole" && s["level"] == "edge")
        .unwrap();
    assert_eq!(edge_indole["ne"]["mean"], 1.0);
}

fn eval_per_graph(
    dir: &std::path::Path,
    ds: &std::path::Path,
    method: &str,
    seed: &str,
) -> std::path::PathBuf {
    let attr = dir.join(format!("{method}{seed}.jsonl"));
    ok(&bxaic(&[
        "baseline",
        "--dataset",
        p(ds),
        "--method",
        method,
        "--seed",
        seed,
        "--out",
        p(&attr),
    ]));
    let rep = dir.join(format!("{method}{seed}.json"));
    ok(&bxaic(&[
        "eval",
        "--dataset",
        p(ds),
        "--attributions",
        p(&attr),
        "--name",
        method,
        "--emit-per-graph",
        "--out",
        p(&rep),
    ]));
    rep
}

#[test]
fn compare_reports() {
    let dir = TempDir::new().unwrap();
    build_fixture(&dir.path().join("ds"));
    let ds = dir.path().join("ds/dataset.jsonl");
    let oracle = eval_per_graph(dir.path(), &ds, "oracle", "0");
    let random = eval_per_graph(dir.path(), &ds, "random", "1");
    let random2 = eval_per_graph(dir.path(), &ds, "random", "2");
    let out = dir.path().join("cmp.json");

    ok(&bxaic(&[
        "compare",
        "--reports",
        p(&oracle),
        p(&random),
        "--out",
        p(&out),
    ]));
    let m = read_json(&out);
    assert_eq!(m["best"], "oracle");
    let rows = m["ranking"].as_array().unwrap();
    assert_eq!(rows[0]["not_significantly_lower"], true);
    assert_eq!(rows[1]["explainer"], "random");
    assert_eq!(rows[1]["not_significantly_lower"], false);
    let by_task = m["by_task"].as_array().unwrap();
    assert_eq!(by_task.len(), 11);
    assert!(by_task.iter().all(|t| t["matrix"]["best"] == "oracle"));

    ok(&bxaic(&[
        "compare",
        "--reports",
        p(&random),
        p(&random),
        "--out",
        p(&out),
    ]));
    let m = read_json(&out);
    assert!(m["ranking"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["not_significantly_lower"] == true));

    ok(&bxaic(&[
        "compare",
        "--reports",
        p(&oracle),
        p(&random),
        p(&random2),
        "--out",
        p(&out),
    ]));
    let m = read_json(&out);
    let pm = m["p_values"].as_array().unwrap();
    assert_eq!(pm.len(), 3);
    assert!(pm.iter().all(|row| row.as_array().unwrap().len() == 3));
    let reps = m["replicates"].as_array().unwrap();
    assert_eq!(reps.len(), 2);
    assert!(reps
        .iter()
        .all(|r| r["explainer"] == "random" && r["runs"] == 2));

    let plain = dir.path().join("plain.json");
    let attr = dir.path().join("oracle0.jsonl");
    ok(&bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&attr),
        "--out",
        p(&plain),
    ]));
    let o = bxaic(&[
        "compare",
        "--reports",
        p(&oracle),
        p(&plain),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(exit::DATA));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--emit-per-graph"));

    let o = bxaic(&["compare", "--reports", p(&oracle), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(exit::USAGE));

    // a report restricted to the test split covers different graphs
    let subset = dir.path().join("subset.json");
    ok(&bxaic(&[
        "eval",
        "--dataset",
        p(&ds),
        "--attributions",
        p(&attr),
        "--ids",
        p(&dir.path().join("ds/test.txt")),
        "--emit-per-graph",
        "--out",
        p(&subset),
    ]));
    let o = bxaic(&[
        "compare",
        "--reports",
        p(&oracle),
        p(&subset),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(exit::DATA));
}
