#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn asset(rel: &str) -> PathBuf {
    root().join(rel)
}

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pgxrag"));
    c.current_dir(root()).env_remove("PGXRAG_API_KEY");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pgxrag")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and asserts success, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

/// Builds an index of the sample corpus restricted to `sources`.
pub fn ingest(dir: &Path, name: &str, sources: &str) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "ingest",
        "--corpus",
        asset("corpus/sample_corpus.jsonl").to_str().unwrap(),
        "--sources",
        sources,
        "--out",
        out.to_str().unwrap(),
    ]);
    out
}
