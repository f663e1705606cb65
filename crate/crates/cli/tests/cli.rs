use std::path::Path;
use std::process::{Command, Output};

fn bench() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bench"));
    cmd.env_remove("CONVGEN_SEED");
    cmd
}

fn check(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// 12 minority rows near (3, 3), 36 majority rows on a grid around the
/// origin.
fn write_dataset(dir: &Path) {
    let mut text = String::from("a,b,Class\n");
    for i in 0..12 {
        text.push_str(&format!("{},{},positive\n", 3.0 + (i % 4) as f64 * 0.3, 3.0 + (i / 4) as f64 * 0.4));
    }
    for i in 0..36 {
        text.push_str(&format!("{},{},negative\n", (i % 6) as f64 * 0.5, (i / 6) as f64 * 0.5 - 1.0));
    }
    std::fs::write(dir.join("toy.csv"), text).unwrap();
}

fn write_config(dir: &Path, seed: u64) {
    std::fs::write(
        dir.join("bench.json"),
        format!(
            r#"{{
                "datasets": [{{"path": "toy.csv"}}],
                "oversamplers": [{{"kind": "repeater"}}, {{"kind": "interpolation", "k": 3}}],
                "classifiers": [{{"kind": "knn"}}, {{"kind": "logreg", "iterations": 200}}],
                "n_folds": 3,
                "n_shuffles": 2,
                "seed": {seed}
            }}"#
        ),
    )
    .unwrap();
}

fn raw_seed(out: &Path) -> u64 {
    let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("raw.json")).unwrap()).unwrap();
    raw["config"]["seed"].as_u64().unwrap()
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    write_config(dir.path(), 3);
    let out = dir.path().join("out");
    check(&bench().arg("run").arg("--config").arg(dir.path().join("bench.json")).arg("--out").arg(&out).output().unwrap());
    for f in ["raw.json", "means.csv", "tables.md", "timings.json", "test_folds.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let means = std::fs::read_to_string(out.join("means.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 4);
    assert!(means.lines().skip(1).all(|l| l.contains(",complete,6,")));
    let tables = std::fs::read_to_string(out.join("tables.md")).unwrap();
    assert!(tables.contains("| toy |"));
}

#[test]
fn report_rerenders_raw_dump() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    write_config(dir.path(), 4);
    let out = dir.path().join("out");
    check(&bench().arg("run").arg("--config").arg(dir.path().join("bench.json")).arg("--out").arg(&out).output().unwrap());
    let md = bench().args(["report", "--format", "md", "--raw"]).arg(out.join("raw.json")).output().unwrap();
    check(&md);
    assert_eq!(String::from_utf8(md.stdout).unwrap(), std::fs::read_to_string(out.join("tables.md")).unwrap());
    let csv = bench().args(["report", "--format", "csv", "--raw"]).arg(out.join("raw.json")).output().unwrap();
    check(&csv);
    assert_eq!(String::from_utf8(csv.stdout).unwrap(), std::fs::read_to_string(out.join("means.csv")).unwrap());
    let bad = bench().args(["report", "--format", "xml", "--raw"]).arg(out.join("raw.json")).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    write_config(dir.path(), 5);
    let config = dir.path().join("bench.json");
    let out = dir.path().join("out");

    check(&bench().arg("run").arg("--config").arg(&config).arg("--out").arg(&out).output().unwrap());
    assert_eq!(raw_seed(&out), 5);
    check(&bench().env("CONVGEN_SEED", "6").arg("run").arg("--config").arg(&config).arg("--out").arg(&out).output().unwrap());
    assert_eq!(raw_seed(&out), 6);
    check(
        &bench()
            .env("CONVGEN_SEED", "6")
            .args(["run", "--seed", "7", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap(),
    );
    assert_eq!(raw_seed(&out), 7);
}

#[test]
fn runs_are_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    write_config(dir.path(), 8);
    let config = dir.path().join("bench.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    check(&bench().args(["run", "--jobs", "1", "--config"]).arg(&config).arg("--out").arg(&a).output().unwrap());
    check(&bench().args(["run", "--jobs", "2", "--config"]).arg(&config).arg("--out").arg(&b).output().unwrap());
    assert_eq!(std::fs::read(a.join("raw.json")).unwrap(), std::fs::read(b.join("raw.json")).unwrap());
}

#[test]
fn synthetic_from_adds_an_oversampler() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    write_config(dir.path(), 9);
    std::fs::write(dir.path().join("extra.csv"), "a,b\n3.1,3.2\n3.3,3.0\n").unwrap();
    let out = dir.path().join("out");
    check(
        &bench()
            .arg("run")
            .arg("--config")
            .arg(dir.path().join("bench.json"))
            .arg("--out")
            .arg(&out)
            .arg("--synthetic-from")
            .arg(dir.path().join("extra.csv"))
            .output()
            .unwrap(),
    );
    let means = std::fs::read_to_string(out.join("means.csv")).unwrap();
    assert!(means.contains("toy,file:extra,knn,complete"));
}

#[test]
fn pca_writes_projection() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    std::fs::write(dir.path().join("syn.csv"), "a,b\n3.1,3.2\n3.3,3.0\n3.2,3.5\n").unwrap();
    let out = dir.path().join("pca.csv");
    let result = bench()
        .arg("pca")
        .arg("--dataset")
        .arg(dir.path().join("toy.csv"))
        .arg("--synthetic")
        .arg(dir.path().join("syn.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    check(&result);
    assert!(String::from_utf8_lossy(&result.stdout).contains("explained variance"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("set,x,y"));
    assert_eq!(text.lines().filter(|l| l.starts_with("real,")).count(), 48);
    assert_eq!(text.lines().filter(|l| l.starts_with("synthetic,")).count(), 3);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bench().args(["run", "--config"]).arg(dir.path().join("nope.json")).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));

    write_dataset(dir.path());
    write_config(dir.path(), 1);
    let bad_env = bench()
        .env("CONVGEN_SEED", "abc")
        .arg("run")
        .arg("--config")
        .arg(dir.path().join("bench.json"))
        .output()
        .unwrap();
    assert!(!bad_env.status.success());
    assert!(String::from_utf8_lossy(&bad_env.stderr).contains("CONVGEN_SEED"));
}
