use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn docqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docqa"))
        .args(args)
        .current_dir(dir)
        .env_remove("DOCQA_CONFIG")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = docqa(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = docqa(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

const ANNOTATIONS: &str = "#docqa-annotations v1
item_id\trange_min\trange_max\toverall\tsharpness\tcolor
a\t0\t100\t20\t30\t25
b\t0\t100\t50\t45\t60
c\t0\t100\t80\t70\t75
";

#[test]
fn label_to_stdout_and_eval_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ann.tsv"), ANNOTATIONS).unwrap();
    let labels = ok(
        dir.path(),
        &["label", "--annotations", "ann.tsv", "--mode", "interp"],
    );
    assert!(labels.starts_with("#docqa-labels v1\n"));
    assert!(labels.contains("#mode interp"));
    fs::write(dir.path().join("labels.tsv"), &labels).unwrap();
    ok(
        dir.path(),
        &["score", "--labels", "labels.tsv", "-o", "out/pred.tsv"],
    );
    let table = ok(
        dir.path(),
        &[
            "eval",
            "--predictions",
            "out/pred.tsv",
            "--ground-truth",
            "ann.tsv",
            "-o",
            "r.json",
        ],
    );
    assert!(table.contains("final"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "docqa-report");
    assert!((report["final"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["scheme"]["centers"][4], 5.0);
}

#[test]
fn validation_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.tsv"), ANNOTATIONS.replace("\t80\t", "\t180\t")).unwrap();
    let err = fails(p, &["label", "--annotations", "bad.tsv"]);
    assert!(err.contains("`c`"), "{err}");

    fs::write(p.join("ann.tsv"), ANNOTATIONS).unwrap();
    fs::write(
        p.join("short.tsv"),
        ANNOTATIONS.lines().take(4).collect::<Vec<_>>().join("\n"),
    )
    .unwrap();
    let labels = ok(p, &["label", "--annotations", "short.tsv"]);
    fs::write(p.join("labels.tsv"), labels).unwrap();
    ok(p, &["score", "--labels", "labels.tsv", "-o", "pred.tsv"]);
    let err = fails(
        p,
        &[
            "eval",
            "--predictions",
            "pred.tsv",
            "--ground-truth",
            "ann.tsv",
        ],
    );
    assert!(err.contains("c/overall"), "{err}");

    let err = fails(
        p,
        &[
            "ensemble",
            "--inputs",
            "pred.tsv",
            "pred.tsv",
            "--weights",
            "0.9,0.3",
        ],
    );
    assert!(!err.is_empty());
    fails(p, &["label", "--annotations", "missing.tsv"]);
    fails(p, &["label", "--annotations", "ann.tsv", "--mode", "cubic"]);
    fails(
        p,
        &[
            "label",
            "--annotations",
            "ann.tsv",
            "--mode",
            "true-variance",
        ],
    );
    fails(p, &["score"]);
    fails(p, &["simulate"]);
}

#[test]
fn config_file_and_environment_default() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("ann.tsv"), ANNOTATIONS).unwrap();
    fs::write(p.join("run.toml"), "label_mode = \"interp\"\n").unwrap();
    let via_flag = ok(
        p,
        &["--config", "run.toml", "label", "--annotations", "ann.tsv"],
    );
    assert!(via_flag.contains("#mode interp"));

    let out = Command::new(env!("CARGO_BIN_EXE_docqa"))
        .args(["label", "--annotations", "ann.tsv"])
        .current_dir(p)
        .env("DOCQA_CONFIG", "run.toml")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), via_flag);

    fs::write(p.join("broken.toml"), "pseudo_ratio = -1\n").unwrap();
    fails(
        p,
        &[
            "--config",
            "broken.toml",
            "label",
            "--annotations",
            "ann.tsv",
        ],
    );
    fs::write(p.join("typo.toml"), "lable_mode = \"interp\"\n").unwrap();
    fails(
        p,
        &["--config", "typo.toml", "label", "--annotations", "ann.tsv"],
    );
}

#[test]
fn simulate_seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--items", "5", "--seed", "1", "-o", "a"]);
    ok(p, &["simulate", "--items", "5", "--seed", "1", "-o", "b"]);
    ok(p, &["simulate", "--items", "5", "--seed", "2", "-o", "c"]);
    let read = |d: &str| fs::read(p.join(d).join("panels.tsv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
