//! End-to-end runs of the `ddsm` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ddsm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddsm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn ddsm")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ddsm(dir, args);
    assert!(
        out.status.success(),
        "ddsm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn synth(dir: &Path, out: &str) {
    ok(
        dir,
        &["synth", "--n", "30", "--seed", "4", "--out-dir", out],
    );
}

#[test]
fn synth_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a");
    synth(dir.path(), "b");
    for f in [
        "graph.tsv",
        "features.csv",
        "labels.txt",
        "splits.tsv",
        "manifest.json",
    ] {
        assert!(dir.path().join("a").join(f).is_file(), "missing {f}");
    }
    let (a, b) = (
        manifest(&dir.path().join("a")),
        manifest(&dir.path().join("b")),
    );
    assert_eq!(a["artifacts"], b["artifacts"]);
    assert_eq!(a["artifacts"].as_object().unwrap().len(), 4);
    assert_eq!(a["seeds"]["sbm"], 4);
    assert_eq!(a["command"], "synth");
}

#[test]
fn invalid_parameters_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        ddsm(dir.path(), &["synth", "--p-in", "1.5"]).status.code(),
        Some(2)
    );
    fs::write(dir.path().join("g.tsv"), "0\t1\n1\t2\n").unwrap();
    assert_eq!(
        ddsm(dir.path(), &["dist", "--graph", "g.tsv", "--kind", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ddsm(
            dir.path(),
            &["dist", "--graph", "g.tsv", "--kind", "prdd", "--gamma", "1.0"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        ddsm(
            dir.path(),
            &["dist", "--graph", "missing.tsv", "--kind", "vdd"]
        )
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn two_node_vdd_distance_is_sqrt_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k2.tsv"), "0\t1\n").unwrap();
    ok(
        dir.path(),
        &[
            "dist", "--graph", "k2.tsv", "--kind", "vdd", "--t", "10", "--kappa", "2",
        ],
    );
    let text = fs::read_to_string(dir.path().join("distances.tsv")).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("#dist v1 kind=vdd params=t=10"));
    let v: f64 = lines
        .next()
        .unwrap()
        .split('\t')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 2f64.sqrt()).abs() <= 1e-12, "{v}");
}

#[test]
fn distance_headers_record_gamma() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    for (kind, gamma) in [("prdd", "0.5"), ("hkdd", "3")] {
        ok(
            dir.path(),
            &[
                "dist",
                "--graph",
                "graph.tsv",
                "--kind",
                kind,
                "--gamma",
                gamma,
                "--kappa",
                "8",
                "--out-dir",
                kind,
            ],
        );
        let text = fs::read_to_string(dir.path().join(kind).join("distances.tsv")).unwrap();
        let head = text.lines().next().unwrap();
        assert!(
            head.contains(&format!("kind={kind} params=gamma={gamma} kappa=8")),
            "{head}"
        );
    }
}

#[test]
fn distances_from_a_saved_basis() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "eig",
            "--graph",
            "graph.tsv",
            "--kappa",
            "6",
            "--out-dir",
            "eig",
        ],
    );
    ok(
        dir.path(),
        &[
            "dist",
            "--graph",
            "graph.tsv",
            "--kind",
            "vdd",
            "--t",
            "3",
            "--kappa",
            "6",
            "--out-dir",
            "direct",
        ],
    );
    ok(
        dir.path(),
        &[
            "dist",
            "--graph",
            "graph.tsv",
            "--kind",
            "vdd",
            "--t",
            "3",
            "--basis",
            "eig/basis.tsv",
            "--out-dir",
            "cached",
        ],
    );
    let read = |d: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join(d).join("distances.tsv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
            .collect()
    };
    for (a, b) in read("direct").iter().zip(read("cached")) {
        assert!((a - b).abs() <= 1e-9);
    }
    // the heat kernel needs the smallest Laplacian eigenpairs, not this basis
    let out = ddsm(
        dir.path(),
        &[
            "dist",
            "--graph",
            "graph.tsv",
            "--kind",
            "hkdd",
            "--basis",
            "eig/basis.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn limit_suite_skips_bipartite_graphs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c6.tsv"),
        "0\t1\n1\t2\n2\t3\n3\t4\n4\t5\n5\t0\n",
    )
    .unwrap();
    ok(
        dir.path(),
        &["check", "--suite", "limits", "--graph", "c6.tsv"],
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suites"][0]["status"], "skipped");
    assert_eq!(report["passed"], true);
}

#[test]
fn quick_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["check", "--quick", "--suite", "bounds,gradient,oracle"],
    );
    assert_eq!(out.lines().count(), 3);
    assert!(manifest(dir.path())["artifacts"]["report.json"].is_string());
}

#[test]
fn zero_layers_return_the_input() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "propagate",
            "--graph",
            "graph.tsv",
            "--features",
            "features.csv",
            "--layers",
            "0",
            "--out-dir",
            "p",
        ],
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("features.csv")).unwrap(),
        fs::read_to_string(dir.path().join("p/propagated.csv")).unwrap()
    );
}

#[test]
fn propagation_diagnostics_cover_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "dist",
            "--graph",
            "graph.tsv",
            "--kind",
            "vdd",
            "--t",
            "2",
            "--exact",
        ],
    );
    ok(
        dir.path(),
        &[
            "propagate",
            "--graph",
            "graph.tsv",
            "--features",
            "features.csv",
            "--dist-cache",
            "distances.tsv",
            "--beta",
            "0.1",
            "--layers",
            "5",
            "--diagnostics",
            "--labels",
            "labels.txt",
        ],
    );
    let layers = fs::read_to_string(dir.path().join("layers.csv")).unwrap();
    assert_eq!(layers.lines().count(), 1 + 6);
    assert!(layers.starts_with("layer,objective,dirichlet,smv,corr,hos,homophily"));
}

#[test]
fn dirichlet_energy_vanishes_on_sqrt_degree_features() {
    let dir = tempfile::tempdir().unwrap();
    let edges = "0\t1\n0\t2\n0\t3\n1\t2\n3\t4\n";
    let deg = [3.0f64, 2.0, 2.0, 2.0, 1.0];
    fs::write(dir.path().join("g.tsv"), edges).unwrap();
    let feats: String = deg
        .iter()
        .map(|d| format!("{},{}\n", d.sqrt(), -2.0 * d.sqrt()))
        .collect();
    fs::write(dir.path().join("x.csv"), feats).unwrap();
    let out = ok(
        dir.path(),
        &["metrics", "--graph", "g.tsv", "--features", "x.csv"],
    );
    let row = out.lines().nth(1).unwrap();
    let dirichlet: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!(dirichlet.abs() <= 1e-12, "{dirichlet}");
    assert_eq!(
        fs::read_to_string(dir.path().join("metrics.csv")).unwrap(),
        format!("{out}")
    );
}

#[test]
fn train_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "train",
            "--graph",
            "graph.tsv",
            "--features",
            "features.csv",
            "--labels",
            "labels.txt",
            "--splits",
            "splits.tsv",
            "--epochs",
            "50",
            "--out-dir",
            "t",
        ],
    );
    let preds = fs::read_to_string(dir.path().join("t/predictions.txt")).unwrap();
    assert_eq!(preds.lines().count(), 30);
    let m = manifest(&dir.path().join("t"));
    assert!(m["summary"]["test_acc"].as_f64().unwrap() >= 0.0);
    assert!(m["inputs"].as_object().unwrap().contains_key("splits.tsv"));
}

#[test]
fn ablation_has_one_row_per_kind_seed_and_beta() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "ablate",
            "--graph",
            "graph.tsv",
            "--features",
            "features.csv",
            "--labels",
            "labels.txt",
            "--kinds",
            "vdd,zero,spd",
            "--seeds",
            "0-2",
            "--betas",
            "0,0.1",
            "--epochs",
            "30",
            "--kappa",
            "8",
        ],
    );
    let rows = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 3 * 2);
    let summary = fs::read_to_string(dir.path().join("ablation_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 2);
}

#[test]
fn replay_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    ok(
        dir.path(),
        &[
            "dist",
            "--graph",
            "graph.tsv",
            "--kind",
            "hkdd",
            "--gamma",
            "2",
            "--kappa",
            "10",
            "--out-dir",
            "run",
        ],
    );
    let out = ok(dir.path(), &["replay", "run/manifest.json"]);
    assert!(out.contains("identical distances.tsv"), "{out}");
    assert_eq!(
        fs::read(dir.path().join("run/distances.tsv")).unwrap(),
        fs::read(dir.path().join("run/replay/distances.tsv")).unwrap()
    );

    // a modified input is refused
    fs::write(dir.path().join("graph.tsv"), "0\t1\n").unwrap();
    assert_eq!(
        ddsm(dir.path(), &["replay", "run/manifest.json"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), ".");
    let args = [
        "dist",
        "--graph",
        "graph.tsv",
        "--kind",
        "prdd",
        "--gamma",
        "0.7",
        "--kappa",
        "12",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_ddsm"))
            .current_dir(dir.path())
            .env("DDSM_THREADS", threads)
            .args(args)
            .args(["--out-dir", threads])
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(fs::read(dir.path().join(threads).join("distances.tsv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = Command::new(env!("CARGO_BIN_EXE_ddsm"))
        .current_dir(dir.path())
        .env("DDSM_THREADS", "0")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
