use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/roorkee_mini")
}

fn lanet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lanet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn built(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join(format!("graph{}.jsonl", extra.len()));
    let manifest = fixtures().join("manifest.toml");
    let mut args = vec!["build", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = lanet(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn build_from_flags_matches_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = built(dir.path(), &[]);
    let b = dir.path().join("flags.jsonl");
    let f = fixtures();
    let o = lanet(&[
        "build",
        "--corpus",
        f.join("corpus.jsonl").to_str().unwrap(),
        "--snapshot",
        f.join("snapshot.tsv").to_str().unwrap(),
        "--lexicon",
        f.join("lexicon.txt").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("total 19 nodes and 35 links"));
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn missing_snapshot_fails_before_processing() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let out = dir.path().join("g.jsonl");
    let o = lanet(&[
        "build",
        "--corpus",
        f.join("corpus.jsonl").to_str().unwrap(),
        "--snapshot",
        dir.path().join("absent.tsv").to_str().unwrap(),
        "--lexicon",
        f.join("lexicon.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("snapshot"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn rankshift_requires_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let g = built(dir.path(), &[]);
    let o = lanet(&["eval", "rankshift", "--graph", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--baseline"));
}

#[test]
fn usage_and_empty_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = built(dir.path(), &[]);
    let g = g.to_str().unwrap();
    assert_eq!(lanet(&["query", "--graph", g, "activities", "--loc", "4", "--generalized", "0"]).status.code(), Some(2));
    assert_eq!(lanet(&["query", "--graph", g, "broadcast", "--lat", "29.868", "--lon", "77.888", "--radius", "-5"]).status.code(), Some(2));
    assert_eq!(lanet(&["query", "--graph", g, "activities", "--loc", "4", "--k", "0"]).status.code(), Some(3));
    assert_eq!(lanet(&["query", "--graph", g, "activities", "--loc", "99"]).status.code(), Some(1));
    assert_eq!(lanet(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let full = built(dir.path(), &[]);
    let plain = built(dir.path(), &["--skip-merge"]);
    let f = fixtures();
    let (full, plain) = (full.to_str().unwrap(), plain.to_str().unwrap());

    let o = lanet(&["eval", "redundancy", "--before", plain, "--after", full, "--snapshot", f.join("snapshot.tsv").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("location_id,"));

    let o = lanet(&["eval", "rankshift", "--graph", full, "--baseline", plain, "--k", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = lanet(&["eval", "winloss", "--graph", full, "--against", full]);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = stdout(&o).lines().last().unwrap().to_owned();
    assert!(last.starts_with("0,0,"), "{last}");

    let o = lanet(&[
        "eval",
        "accuracy",
        "--graph",
        full,
        "--gt",
        f.join("ground_truth.tsv").to_str().unwrap(),
        "--lexicon",
        f.join("lexicon.txt").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "location_id,matched,activities,accuracy\n4,3,5,0.600000\n6,2,3,0.666667\n");
}

#[test]
fn export_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let g = built(dir.path(), &[]);
    let g = g.to_str().unwrap();
    let xml = dir.path().join("g.graphml");
    assert!(lanet(&["export", "--graph", g, "graphml", "--out", xml.to_str().unwrap()]).status.success());
    assert!(std::fs::read_to_string(xml).unwrap().contains("<graphml"));
    let o = lanet(&["export", "--graph", g, "records"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(g).unwrap());
    let o = lanet(&["export", "--graph", g, "si-csv"]);
    assert!(stdout(&o).starts_with("location_id,1,2"));
    let o = lanet(&["stats", "--graph", g]);
    assert!(stdout(&o).contains("Hotel Royal Palace"));
}

#[test]
fn corrupt_graph_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.jsonl");
    std::fs::write(&g, "{\"label\":\"Activity\",\"Activity_Name\":\"(a, b)\"}\nnot json\n").unwrap();
    let o = lanet(&["stats", "--graph", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":2"), "{}", stderr(&o));
}
