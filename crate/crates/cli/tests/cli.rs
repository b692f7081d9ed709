use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn demkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen_square(dir: &Path, l: usize) -> String {
    let path = dir.join(format!("sq{l}.json"));
    let out = demkit(&[
        "graph", "gen", "--family", "square",
        "--rows", &l.to_string(), "--cols", &l.to_string(),
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn graph_and_mis() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_square(dir.path(), 3);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&g).unwrap()).unwrap();
    assert_eq!(doc["n"], 9);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 12);

    for method in ["brute", "tarjan"] {
        let r = stdout_json(&demkit(&["mis", "solve", "--graph", &g, "--method", method]));
        assert_eq!(r["size"], 5);
        assert_eq!(r["witness"], "101010101");
    }
}

#[test]
fn embedded_graph_has_sixteen_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.json");
    let out = demkit(&[
        "graph", "gen", "--family", "kings", "--rows", "6", "--cols", "6",
        "--embed", "--placement-seed", "3", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["n"], 16);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 42);
}

#[test]
fn emulate_calibrate_and_decide() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_square(dir.path(), 3);
    let shots = dir.path().join("shots.jsonl");
    let out = demkit(&[
        "noise", "emulate", "--graph", &g, "--p01", "0.1", "--p10", "0.2",
        "--shots", "50", "--seed", "4", "--out", shots.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&shots).unwrap();
    assert_eq!(text.lines().count(), 50);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["graph_id"], "sq3");

    let cal = stdout_json(&demkit(&[
        "noise", "calibrate", "--ideal", "101010101", "--shots", shots.to_str().unwrap(),
    ]));
    assert_eq!(cal["shots"], 50);
    assert!(cal["p_eff"].as_f64().unwrap() > 0.0);

    let out = demkit(&["dem", "run", "--graph", &g, "--k", "5", "--shots", shots.to_str().unwrap()]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let summary = &lines.last().unwrap()["summary"];
    assert_eq!(summary["decision"], "YES");
    assert_eq!(lines.len() - 1, summary["shots_processed"].as_u64().unwrap() as usize);

    // k above the MIS with a tiny budget: NO and exit code 3
    let out = demkit(&[
        "dem", "run", "--graph", &g, "--k", "6", "--budget", "10",
        "--shots", shots.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tarjan_and_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_square(dir.path(), 4);
    let r = stdout_json(&demkit(&["dem", "tarjan", "--graph", &g, "--p", "0.1"]));
    assert_eq!(r["K"], 8);
    assert_eq!(r["size"], 8);

    let v = stdout_json(&demkit(&["analyze", "volume", "--n", "9", "--p", "0.2"]));
    assert_eq!(v["t_exact"], "46");
    assert_eq!(v["radius"], 2);

    let f = stdout_json(&demkit(&["analyze", "fit", "--points", "10:1024,20:1048576,30:1073741824"]));
    assert!((f["c_emp"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let b = stdout_json(&demkit(&["analyze", "breakeven", "--p-eff", "0.3"]));
    let n = b["ratio_n"].as_u64().unwrap();
    assert!((100..=400).contains(&n), "{n}");
}

#[test]
fn campaign_run_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "id": "cli", "seed": 3, "mode": "both",
            "shots_per_instance": 10,
            "instances": [{"lattice": {"family": "square", "rows": 3, "cols": 3}},
                          {"lattice": {"family": "square", "rows": 4, "cols": 4}},
                          {"lattice": {"family": "square", "rows": 5, "cols": 5}}],
            "noise": {"symmetric": [0.2, 0.5]}}"#,
    )
    .unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = demkit(&["campaign", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for table in ["scaling.csv", "rate_sweep.csv", "exponent.csv"] {
        let a = fs::read(out_a.join(table)).unwrap();
        let b = fs::read(out_b.join(table)).unwrap();
        assert_eq!(a, b, "{table}");
    }
    let meta: Value = serde_json::from_str(&fs::read_to_string(out_a.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["rows"], 3 * 2 * 11);

    let rows = out_a.join("rows.jsonl");
    let o = demkit(&["campaign", "tables", "--rows", rows.to_str().unwrap(), "--kind", "scaling"]);
    assert!(o.status.success());
    assert_eq!(o.stdout, fs::read(out_a.join("scaling.csv")).unwrap());
}

#[test]
fn ingest_device_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("run.json");
    fs::write(
        &export,
        r#"{"register": {"positions_um": [[0, 0], [5.4, 0], [0, 5.4], [5.4, 5.4]],
                         "blockade_radius_um": 7.2},
            "measurements": ["1001", "1001", [0, 1, 1, 0], "1101"]}"#,
    )
    .unwrap();
    let norm = dir.path().join("norm.jsonl");
    let r = stdout_json(&demkit(&[
        "ingest", "--shots", export.to_str().unwrap(), "--normalized", norm.to_str().unwrap(),
    ]));
    assert_eq!(r["n"], 4);
    assert_eq!(r["mis_size"], 2);
    assert_eq!(r["heavy_shots"], serde_json::json!([3]));
    assert_eq!(fs::read_to_string(&norm).unwrap().lines().count(), 4);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n": 2, "edges": [[0, 0]]}"#).unwrap();
    let out = demkit(&["mis", "solve", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let g = gen_square(dir.path(), 3);
    let out = demkit(&["dem", "tarjan", "--graph", &g, "--p", "0.7"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"schema_version": 1, "id": "x", "seed": 0, "mode": "bf_dem", "instances": [], "extra": 1}"#).unwrap();
    let out = demkit(&["campaign", "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = demkit(&["analyze", "fit", "--points", "1:2,x"]);
    assert_eq!(out.status.code(), Some(2));
}
