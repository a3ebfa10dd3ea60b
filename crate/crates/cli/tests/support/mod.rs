#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn corpus_1000() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus_1000.smi")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn bxaic(args: &[&str]) -> Output {
    bxaic_env(args, &[])
}

pub fn bxaic_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bxaic"));
    cmd.args(args).env_remove("BXAIC_PATTERN_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("bxaic runs")
}

pub fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Builds the full fixture corpus with seed 42 into `dir`.
pub fn build_fixture(dir: &Path) {
    ok(&bxaic(&[
        "build",
        "--input",
        p(&corpus_1000()),
        "--out",
        p(dir),
        "--seed",
        "42",
    ]));
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
