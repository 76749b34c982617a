//! Runs the `isc` binary as a subprocess.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn isc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isc"))
        .args(args)
        .env_remove("ISC_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cluster_karate_writes_labels_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let edges = common::data_dir().join("karate.edges");
    let out = dir.path().join("karate.isc.labels");
    let o = isc(&[
        "cluster",
        "--edges",
        path(&edges),
        "--k",
        "2",
        "--seed",
        "7",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 34);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("karate.isc.labels.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["delta"], 0.1);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["method"], "isc");
    assert_eq!(meta["eigenvalues"].as_array().unwrap().len(), 3);

    let e = isc(&[
        "eval",
        "--pred",
        path(&out),
        "--truth",
        path(&common::data_dir().join("karate.labels")),
    ]);
    assert!(e.status.success());
    assert!(stdout(&e).starts_with("0/34, rate 0.0"), "{}", stdout(&e));
}

#[test]
fn cluster_routes_to_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let edges = common::data_dir().join("karate.edges");
    for method in ["rsc", "score"] {
        let out = dir.path().join(format!("{method}.labels"));
        let o = isc(&[
            "cluster",
            "--edges",
            path(&edges),
            "--k",
            "2",
            "--method",
            method,
            "--n-eigs",
            "K",
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let meta = std::fs::read_to_string(dir.path().join(format!("{method}.labels.meta.json"))).unwrap();
        assert!(meta.contains(&format!("\"method\": \"{method}\"")));
        assert!(meta.contains("\"n_eigs\": \"K\""));
    }
}

#[test]
fn missing_k_is_exit_2_with_usage() {
    let o = isc(&["cluster", "--edges", "whatever.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn malformed_edge_list_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("bad.txt");
    std::fs::write(&edges, "0 1\n1 2 3\n").unwrap();
    let o = isc(&[
        "cluster",
        "--edges",
        path(&edges),
        "--k",
        "2",
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
    let o = isc(&["cluster", "--edges", path(&dir.path().join("absent.txt")), "--k", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn singular_laplacian_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    std::fs::write(&edges, "n=5\n0 1\n1 2\n2 3\n").unwrap();
    let o = isc(&[
        "cluster",
        "--edges",
        path(&edges),
        "--k",
        "2",
        "--delta",
        "0",
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("singular"));
}

#[test]
fn generate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for prefix in [&a, &b] {
        let o = isc(&[
            "generate",
            "--name",
            "exp1a",
            "--seed",
            "3",
            "--out-prefix",
            path(prefix),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |p: &Path, ext: &str| std::fs::read(format!("{}{ext}", p.display())).unwrap();
    assert_eq!(read(&a, ".edges"), read(&b, ".edges"));
    assert_eq!(read(&a, ".labels"), read(&b, ".labels"));
    assert_eq!(String::from_utf8(read(&a, ".labels")).unwrap().lines().count(), 400);
    let edges = String::from_utf8(read(&a, ".edges")).unwrap();
    assert!(edges.starts_with("n=400\n"));

    let o = isc(&["generate", "--name", "exp1a", "--seed", "4", "--out-prefix", path(&b)]);
    assert!(o.status.success());
    assert_ne!(read(&a, ".edges"), read(&b, ".edges"));
}

#[test]
fn generate_rejects_probability_above_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.toml");
    std::fs::write(
        &cfg,
        "n = 50\nk = 2\np = [0.9, 0.5, 0.5, 0.9]\n\
         theta = { rule = \"per_community\", values = [0.5, 1.2] }\n\
         membership = { rule = \"blocks\", sizes = [25] }\n",
    )
    .unwrap();
    let o = isc(&[
        "generate",
        "--config",
        path(&cfg),
        "--seed",
        "1",
        "--out-prefix",
        path(&dir.path().join("g")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pair"), "{}", stderr(&o));
}

#[test]
fn eval_handles_relabeling_and_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    let p = dir.path().join("p");
    let short = dir.path().join("s");
    std::fs::write(&t, "1\n1\n2\n2\n3\n").unwrap();
    std::fs::write(&p, "2\n2\n3\n3\n1\n").unwrap();
    std::fs::write(&short, "1\n2\n").unwrap();
    let o = isc(&[
        "eval",
        "--pred",
        path(&p),
        "--truth",
        path(&t),
        "--report",
        path(&dir.path().join("r.json")),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("0/5, rate 0.0"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["errors"], 0);
    assert_eq!(report["n"], 5);
    let o = isc(&["eval", "--pred", path(&short), "--truth", path(&t)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn experiment_writes_series_for_each_sweep_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp1a");
    let o = isc(&[
        "experiment",
        "--name",
        "exp1a",
        "--replicates",
        "2",
        "--restarts",
        "3",
        "--seed",
        "1",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let series = std::fs::read_to_string(out.join("series_isc.tsv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 10);
    for f in [
        "rows.tsv",
        "summary.tsv",
        "summary.json",
        "series_weak_signal_l.tsv",
        "series_rsc.tsv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn experiment_from_custom_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.toml");
    std::fs::write(
        &cfg,
        "name = \"custom\"\nreplicates = 2\nrestarts = 3\nmethods = [\"isc\", \"isc_dmin\"]\n\
         [model]\nn = 60\nk = 2\np = [0.9, 0.2, 0.2, 0.9]\n\
         theta = { rule = \"constant\", value = 0.8 }\nmembership = { rule = \"iid_uniform\" }\n\
         [sweep]\nparam = \"delta\"\nvalues = [0.05, 0.1]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = isc(&["experiment", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("series_isc_dmin.tsv").is_file());
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 2);
}

#[test]
fn unknown_experiment_lists_names() {
    let o = isc(&["experiment", "--name", "exp9z"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("exp1a") && err.contains("exp2f"), "{err}");
}

#[test]
fn sweeps_on_a_named_dataset() {
    let data = common::data_dir();
    let o = isc(&[
        "sweep-delta",
        "--dataset",
        "karate",
        "--data-dir",
        path(&data),
        "--deltas",
        "0,0.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errors: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(3).unwrap().to_string())
        .collect();
    assert_eq!(errors, vec!["1", "0"]);

    let o = isc(&["d-variants", "--dataset", "karate", "--data-dir", path(&data)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);

    // Without a data directory the dataset cannot be found.
    let o = isc(&["d-variants", "--dataset", "karate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fetch_copies_local_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::data_dir();
    let o = isc(&[
        "fetch",
        "--name",
        "club",
        "--edges",
        path(&data.join("karate.edges")),
        "--labels",
        path(&data.join("karate.labels")),
        "--dir",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("34 nodes, 78 edges, 2 communities"));
    assert!(dir.path().join("club.edges").is_file());
}

#[test]
fn spectrum_reports_weak_signal() {
    let edges = common::data_dir().join("karate.edges");
    let o = isc(&["spectrum", "--edges", path(&edges), "--k", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("d\t9\n"), "{text}");
    assert!(text.contains("weak_signal\t0.1609"), "{text}");
}
