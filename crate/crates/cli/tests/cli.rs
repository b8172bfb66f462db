use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn engn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engn"))
        .args(args)
        .current_dir(dir)
        .env_remove("ENGN_SEED")
        .output()
        .expect("spawn engn")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = engn(args, dir);
    assert!(
        out.status.success(),
        "engn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn analyze_prefers_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let v: Value = serde_json::from_str(ok(&["analyze", "--q", "4", "--f", "2", "--h", "8"], dir.path()).trim()).unwrap();
    assert_eq!(v["chosen"], "column");
    assert_eq!(v["read_col"], 58);
    assert_eq!(v["total_row"], 240);
}

#[test]
fn analyze_tie_goes_to_column() {
    let dir = tempfile::tempdir().unwrap();
    let v: Value = serde_json::from_str(ok(&["analyze", "--q", "1", "--f", "5", "--h", "3"], dir.path()).trim()).unwrap();
    assert_eq!(v["tie"], true);
    assert_eq!(v["chosen"], "column");
}

#[test]
fn analyze_map_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["analyze", "--map", "hs", "--n", "128", "--f", "64", "--h", "32", "--r", "128", "--c", "16"];
    let v: Value = serde_json::from_str(ok(&args, dir.path()).trim()).unwrap();
    assert_eq!(v["strategy"], "HS");
    assert_eq!(v["latency_cycles"], 128.0);
    assert_eq!(v["bandwidth_words"], 144);
}

#[test]
fn analyze_without_inputs_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(engn(&["analyze"], dir.path()).status.code(), Some(1));
}

#[test]
fn generated_graph_validates() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen-graph", "--n", "10000", "--e", "200000", "--seed", "1", "--out", "g.el"], dir.path());
    let out = ok(&["validate", "g.el"], dir.path());
    assert!(out.starts_with("OK: 10000 vertices, 200000 edges"), "{out}");
}

#[test]
fn validate_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.el"), "0 1\n2 x\n").unwrap();
    let out = engn(&["validate", "bad.el"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn bad_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(engn(&["run", "--no-such-flag"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_weight_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = engn(
        &["run", "--synthetic", "n=64,e=256", "--weights", "missing_weights.bin"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_weights.bin"));
}

#[test]
fn sweep_davc_bytes_gives_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["sweep", "--synthetic", "n=500,e=4000", "--davc-bytes", "16384,65536", "--out", "s"],
        dir.path(),
    );
    let rows = jsonl(&dir.path().join("s.jsonl"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["davc_bytes"], 16384);
    assert_eq!(rows[1]["davc_bytes"], 65536);
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn rho_sweep_hit_rate_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "sweep",
            "--synthetic",
            "n=4000,e=40000",
            "--davc-bytes",
            "16384",
            "--rho",
            "0,0.25,0.5,0.75,1.0",
            "--out",
            "rho",
        ],
        dir.path(),
    );
    let rates: Vec<f64> = jsonl(&dir.path().join("rho.jsonl"))
        .iter()
        .map(|r| r["davc_hit_rate"].as_f64().unwrap())
        .collect();
    assert_eq!(rates.len(), 5);
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
}

#[test]
fn cora_shaped_first_layer_uses_fau() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "--synthetic", "n=2708,e=10556", "--dims", "1433:16", "16:7", "--out", "cora"],
        dir.path(),
    );
    let rows = jsonl(&dir.path().join("cora.jsonl"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["order"], "FAU");
    assert!(dir.path().join("cora.cfg").exists());
}

#[test]
fn afu_chosen_for_expanding_gcn_layer() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "--synthetic", "n=300,e=2000", "--dims", "4:64", "--out", "afu"], dir.path());
    assert_eq!(jsonl(&dir.path().join("afu.jsonl"))[0]["order"], "AFU");
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["run", "--synthetic", "n=800,e=6000", "--dims", "8:16", "16:4", "--out", out];
    ok(&args("a"), dir.path());
    ok(&args("b"), dir.path());
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn engn_seed_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, out: &str| {
        let result = Command::new(env!("CARGO_BIN_EXE_engn"))
            .args(["gen-graph", "--n", "200", "--e", "1000", "--out", out])
            .current_dir(dir.path())
            .env("ENGN_SEED", seed)
            .output()
            .unwrap();
        assert!(result.status.success());
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("7", "a.el");
    let b = run("7", "b.el");
    let c = run("8", "c.el");
    assert_eq!(a, b);
    assert_ne!(a, c);
    ok(&["gen-graph", "--n", "200", "--e", "1000", "--seed", "7", "--out", "d.el"], dir.path());
    assert_eq!(a, std::fs::read(dir.path().join("d.el")).unwrap());
}

#[test]
fn config_file_and_set_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sim.cfg"), "# small array\nrows=32\ncols=8\n").unwrap();
    ok(
        &["run", "--synthetic", "n=200,e=1000", "--config", "sim.cfg", "--set", "cols=4", "--out", "c"],
        dir.path(),
    );
    let row = &jsonl(&dir.path().join("c.jsonl"))[0];
    assert_eq!(row["rows"], 32);
    assert_eq!(row["cols"], 4);
    let out = engn(&["run", "--set", "no_such_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_banks_writes_schedule() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.el"), "2 0\n3 0\n0 1\n3 1\n1 2\n0 3\n2 3\n").unwrap();
    ok(&["analyze", "--graph", "g.el", "--dump-banks", "banks.csv", "--r", "4"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("banks.csv")).unwrap();
    assert!(csv.starts_with("bank,position,src,dst,slot,offset,cycle"));
    assert_eq!(csv.lines().count(), 8);
}
