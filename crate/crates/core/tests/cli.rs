use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/toy2");

fn ptmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptmix")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = ptmix(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn fixture(name: &str) -> String {
    format!("{FIXTURE}/{name}")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.to_string_lossy().into_owned();
    let mut args = vec!["simulate", "--out-dir", out.as_str()];
    args.extend_from_slice(extra);
    ok(&args);
    dir.to_path_buf()
}

#[test]
fn simulate_writes_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &["--seed", "3"]);
    let data = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let lines: Vec<&str> = data.lines().collect();
    assert_eq!(lines.len(), 201);
    assert!(lines.iter().all(|l| l.split(',').count() == 221));
    assert!(lines[0].starts_with("sample_id,v1,"));
    let manifest = json(dir.path().join("manifest.json"));
    assert_eq!(manifest["n_vars"], 220);
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["informative_indices"].as_array().unwrap().len(), 20);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(a.path(), &["--q", "30", "--seed", "8"]);
    simulate(b.path(), &["--q", "30", "--seed", "8"]);
    for f in ["data.csv", "labels.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn three_component_design_has_three_labels() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &["--n", "200", "--m", "20", "--q", "200", "--g", "3"]);
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    let mut distinct: Vec<&str> = labels.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct, vec!["0", "1", "2"]);
}

#[test]
fn fixture_fit_recovers_the_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    ok(&["fit", "--data", &fixture("data.csv"), "--g", "2", "--out-dir", &out]);
    ok(&[
        "evaluate",
        "--labels",
        &fixture("labels.csv"),
        "--manifest",
        &fixture("manifest.json"),
        "--result",
        &path(dir.path(), "fit.json"),
        "--out-dir",
        &out,
    ]);
    let eval = json(dir.path().join("eval.json"));
    assert_eq!(eval["ari"].as_f64(), Some(1.0));
    assert_eq!(eval["tp"], 3);
}

#[test]
fn simulated_output_feeds_fit_directly() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &["--n", "40", "--m", "4", "--q", "6", "--dof", "high"]);
    let out = dir.path().to_string_lossy().into_owned();
    ok(&["fit", "--data", &path(dir.path(), "data.csv"), "--out-dir", &out, "--set", "fit.g=1"]);
    let fit = json(dir.path().join("fit.json"));
    assert!(fit["assignments"].as_array().unwrap().iter().all(|a| a == 0));
    assert_eq!(fit["converged"], true);
    assert_eq!(fit["column_names"][0], "v1");
}

#[test]
fn full_shrinkage_clears_the_mask() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let data = fixture("data.csv");
    ok(&["fit", "--data", &data, "--lambda-mu", "1e6", "--lambda-sigma", "1e6", "--out-dir", &out]);
    let fit = json(dir.path().join("fit.json"));
    assert!(fit["informative_mask"].as_array().unwrap().iter().all(|m| m == false));
    assert!(fit["selected_variables"].as_array().unwrap().is_empty());
}

#[test]
fn evaluate_identity_and_constant_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let labels: Vec<u64> = std::fs::read_to_string(fixture("labels.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let perfect = serde_json::json!({ "assignments": labels, "selected_variables": [0, 1, 2] });
    std::fs::write(dir.path().join("perfect.json"), perfect.to_string()).unwrap();
    let eval_args = |result: &str| {
        vec![
            "evaluate".to_owned(),
            "--labels".into(),
            fixture("labels.csv"),
            "--manifest".into(),
            fixture("manifest.json"),
            "--result".into(),
            path(dir.path(), result),
            "--out-dir".into(),
            out.clone(),
        ]
    };
    let args = eval_args("perfect.json");
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let eval = json(dir.path().join("eval.json"));
    for key in ["ari", "sensitivity", "specificity"] {
        assert_eq!(eval[key].as_f64(), Some(1.0), "{key}");
    }

    ok(&["fit", "--data", &fixture("data.csv"), "--g", "1", "--out-dir", &out]);
    let args = eval_args("fit.json");
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let eval = json(dir.path().join("eval.json"));
    assert!(eval["ari"].as_f64().unwrap() <= 0.0);
    assert_eq!(eval["ari_degenerate"], false);

    let short = serde_json::json!({ "assignments": [0, 1], "selected_variables": [] });
    std::fs::write(dir.path().join("short.json"), short.to_string()).unwrap();
    let args = eval_args("short.json");
    assert_eq!(ptmix(&args.iter().map(String::as_str).collect::<Vec<_>>()).status.code(), Some(2));
}

#[test]
fn select_without_bootstrap_echoes_a_single_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    ok(&[
        "select",
        "--data",
        &fixture("data.csv"),
        "--g-candidates",
        "2",
        "--no-bootstrap",
        "--set",
        "grid.mu=1",
        "--set",
        "grid.sigma=1",
        "--set",
        "grid.scale=2",
        "--out-dir",
        &out,
    ]);
    let report = json(dir.path().join("report.json"));
    assert_eq!(report["chosen_g"], 2);
    assert_eq!(report["chosen_lambda"]["lambda_mu"].as_f64(), Some(2.0));
    assert_eq!(report["used_bootstrap"], false);
    let bic = std::fs::read_to_string(dir.path().join("bic.csv")).unwrap();
    assert_eq!(bic.lines().count(), 2);
}

#[test]
fn ranked_csv_is_sorted_and_runs_are_reproducible() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_string_lossy().into_owned();
        ok(&[
            "select",
            "--data",
            &fixture("data.csv"),
            "--g-candidates",
            "1,2",
            "--replicates",
            "6",
            "--threads",
            threads,
            "--set",
            "grid.mu=1,2",
            "--set",
            "grid.sigma=1,2",
            "--set",
            "grid.scale=4",
            "--out-dir",
            &out,
        ]);
        dir
    };
    let (a, b, c) = (run("1"), run("1"), run("2"));
    for f in ["report.json", "ranked.csv", "bic.csv", "heatmap.csv"] {
        let bytes = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(bytes, std::fs::read(b.path().join(f)).unwrap(), "{f} rerun");
        assert_eq!(bytes, std::fs::read(c.path().join(f)).unwrap(), "{f} threads");
    }
    let ranked = std::fs::read_to_string(a.path().join("ranked.csv")).unwrap();
    let rows: Vec<(usize, f64)> = ranked
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1][1..].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 8);
    for w in rows.windows(2) {
        assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
    }
    assert!(rows.first().unwrap().1 > rows.last().unwrap().1);
    let report = json(a.path().join("report.json"));
    assert_eq!(report["used_bootstrap"], true);
}

#[test]
fn fit_output_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = dir.path().to_string_lossy().into_owned();
        ok(&["fit", "--data", &fixture("data.csv"), "--lambda-mu", "3", "--lambda-sigma", "3", "--out-dir", &out]);
    }
    assert_eq!(std::fs::read(a.path().join("fit.json")).unwrap(), std::fs::read(b.path().join("fit.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();

    // parse error, with the position reported
    std::fs::write(dir.path().join("bad.csv"), "id,a,b\ns1,1,2\ns2,3,x\n").unwrap();
    let res = ptmix(&["fit", "--data", &path(dir.path(), "bad.csv"), "--out-dir", &out]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 3") && err.contains("column 3"), "{err}");

    // validation
    assert_eq!(ptmix(&["fit", "--data", &fixture("data.csv"), "--g", "0"]).status.code(), Some(2));
    assert_eq!(ptmix(&["fit", "--set", "em.unknown=1"]).status.code(), Some(2));

    // numerical: iteration cap reached, partial output kept
    let res = ptmix(&[
        "fit",
        "--data",
        &fixture("data.csv"),
        "--set",
        "em.max_iterations=1",
        "--set",
        "em.rel_tol=1e-15",
        "--out-dir",
        &out,
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(json(dir.path().join("fit.json"))["converged"], false);

    // I/O: missing input, output directory blocked by a file
    assert_eq!(ptmix(&["fit", "--data", &path(dir.path(), "missing.csv")]).status.code(), Some(4));
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let blocked = path(dir.path(), "blocker/sub");
    assert_eq!(ptmix(&["simulate", "--q", "5", "--out-dir", &blocked]).status.code(), Some(4));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# small design\nsim.n = 30\nsim.q = 4\nsim.m = 2\nseed = 5\n").unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    ok(&["simulate", "--config", conf.to_str().unwrap(), "--n", "25", "--out-dir", &out]);
    let manifest = json(dir.path().join("manifest.json"));
    assert_eq!(manifest["n_samples"], 25);
    assert_eq!(manifest["n_vars"], 6);
    assert_eq!(manifest["seed"], 5);
}
