//! The command-line tool end to end.

use std::path::Path;
use std::process::{Command, Output};

fn matchest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchest")).current_dir(dir).args(args).output().unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("matchest-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("tri.el"), "# triangle with a pendant edge\n4 4\n0 1\n1 2\n0 2\n2 3\n").unwrap();
    dir
}

#[test]
fn peel_writes_report_csv_and_timing() {
    let dir = scratch("peel");
    let out = matchest(&dir, &["peel", "--graph", "tri.el", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("o/peel.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["summary"]["maximum_matching"], 2);
    assert!(std::fs::read_to_string(dir.join("o/peel.csv")).unwrap().starts_with("round,peeled\n"));
    assert!(dir.join("o/peel.timing.json").exists());
}

#[test]
fn reports_are_reproducible() {
    let dir = scratch("repro");
    let run = |threads: &str, out: &str| {
        let o = matchest(&dir, &["--seed", "4", "--threads", threads, "estimate", "--graph", "tri.el", "--trials", "9", "--out-dir", out]);
        assert!(o.status.success());
        (std::fs::read(dir.join(out).join("estimate.json")).unwrap(), std::fs::read(dir.join(out).join("estimate.csv")).unwrap())
    };
    assert_eq!(run("1", "a"), run("3", "b"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("config");
    std::fs::write(dir.join("run.toml"), "seed = 5\nformat = \"toml\"\n[estimate]\ngraph = \"tri.el\"\ntrials = 2\n").unwrap();
    let out = matchest(&dir, &["--config", "run.toml", "estimate", "--trials", "3", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("o/estimate.toml")).unwrap();
    assert!(text.contains("seed = 5"));
    assert!(text.contains("trials = 3"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = scratch("usage");
    assert_eq!(matchest(&dir, &["estimate"]).status.code(), Some(2));
    assert_eq!(matchest(&dir, &["peel", "--graph", "tri.el", "--delta", "3"]).status.code(), Some(2));
    assert_eq!(matchest(&dir, &["nonsense"]).status.code(), Some(2));
    assert_eq!(matchest(&dir, &["accept", "--only", "14"]).status.code(), Some(2));
}

#[test]
fn forge_pair_round_trips_through_verify() {
    let dir = scratch("forge");
    assert!(matchest(&dir, &["forge", "build-pair", "--c", "4", "--k", "1", "--out-dir", "o"]).status.success());
    let out = matchest(&dir, &["forge", "verify", "--g", "o/pair-c4-k1-g.el", "--h", "o/pair-c4-k1-h.el", "--k", "2", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn accept_subset_and_fault_injection() {
    let dir = scratch("accept");
    let ok = matchest(&dir, &["--quick", "accept", "--only", "7,12", "--out-dir", "o"]);
    assert!(ok.status.success());
    let lines = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(lines.lines().filter(|l| l.contains("PASS")).count(), 2);
    let bad = matchest(&dir, &["--quick", "accept", "--only", "2,6", "--fault", "bad-delta", "--out-dir", "o"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(String::from_utf8(bad.stdout).unwrap().lines().filter(|l| l.contains("FAIL")).count(), 2);
}

#[test]
fn query_forms_and_spec_flags() {
    let dir = scratch("flags");
    let json = |p: &str| -> serde_json::Value { serde_json::from_slice(&std::fs::read(dir.join(p)).unwrap()).unwrap() };
    let ok = |args: &[&str]| {
        let out = matchest(&dir, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["lca", "--graph", "tri.el", "--query", "edge:2,1", "--out-dir", "o"]);
    assert!(json("o/lca.json")["summary"]["probes"].is_u64());
    ok(&["lca", "--graph", "tri.el", "--query", "vertex:3", "--out-dir", "o"]);
    ok(&["lca", "--graph", "tri.el", "--all-edges", "--out-dir", "o"]);
    assert_eq!(json("o/lca.json")["summary"]["is_matching"], true);
    assert_eq!(matchest(&dir, &["lca", "--graph", "tri.el", "--query", "edge:0,3"]).status.code(), Some(2));
    assert_eq!(matchest(&dir, &["lca", "--graph", "tri.el", "--query", "bogus"]).status.code(), Some(2));

    ok(&["peel", "--graph", "tri.el", "--rounds", "3", "--out-dir", "o"]);
    assert_eq!(json("o/peel.json")["summary"]["per_round_peels"].as_array().unwrap().len(), 3);
    ok(&["estimate", "--graph", "tri.el", "--mode", "iid", "--budget", "40", "--trials", "2", "--out-dir", "o"]);
    let csv = std::fs::read_to_string(dir.join("o/estimate.csv")).unwrap();
    assert!(csv.starts_with("trial,estimate,samples_used,mm_exact"));
    ok(&["greedy", "--kind", "hde", "--d", "16", "--eps", "0.25", "--trials", "200", "--out-dir", "o"]);
    assert!(std::fs::read_to_string(dir.join("o/greedy.csv")).unwrap().starts_with("trial,T,D,truncated\n"));
    ok(&["greedy", "--measure", "scaling", "--ds", "8,16", "--trials", "200", "--out-dir", "o"]);
    assert_eq!(json("o/greedy.json")["summary"]["ds"].as_array().unwrap().len(), 2);
    ok(&["forge", "build-pair", "--c", "2", "--k", "1", "--out", "p/x", "--out-dir", "o"]);
    assert!(dir.join("p/x-g.el").exists() && dir.join("p/x-trace.json").exists());
}
