use std::path::Path;
use std::process::{Command, Output};

fn cachehop(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachehop")).args(args).current_dir(cwd).env_remove("CACHEHOP_OUT").output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn sweep_writes_one_means_row_per_n_and_selector() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = cachehop(
        &["sweep", "--n", "1..6", "--drops", "3", "--algos", "greedy,benchmark", "--set", "num_ues=20", "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let means = read(&out.join("means.csv"));
    assert_eq!(means.lines().count(), 1 + 6 * 2);
    assert!(means.starts_with("N,algo,policy,mean_s"));
    let durations = read(&out.join("durations.csv"));
    assert!(durations.starts_with("drop,N,algo,policy,ue,duration_s\n"));
    // Σ over N of 3 drops × N UEs × 2 selectors
    assert_eq!(durations.lines().count() - 1, (1..=6).map(|n| 3 * n * 2).sum::<usize>());
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert!(summary["6"]["greedy"].as_f64().unwrap() > 0.0);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["n"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(listing(tmp.path()), vec!["sweep"]);
}

#[test]
fn replay_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let o = cachehop(&["replay", "--seed", "5", "--drop", "7", "--n", "4", "--out", dir], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(listing(&a), listing(&b));
    assert!(listing(&a).contains(&"greedy-pa_events.csv".to_string()));
    for name in listing(&a) {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn replayed_snapshot_reproduces_the_drop() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(cachehop(&["replay", "--seed", "2", "--n", "3", "--out", "a"], tmp.path()).status.success());
    let snap = tmp.path().join("a/scenario.json");
    assert!(cachehop(&["replay", "--scenario", snap.to_str().unwrap(), "--out", "b"], tmp.path()).status.success());
    assert_eq!(read(&tmp.path().join("a/replay.json")), read(&tmp.path().join("b/replay.json")));
}

#[test]
fn campaign_outputs_do_not_depend_on_workers() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, w) in [("one", "1"), ("four", "4")] {
        let o = cachehop(&["run", "--n", "5", "--drops", "6", "--workers", w, "--set", "num_ues=30", "--out", dir], tmp.path());
        assert!(o.status.success());
    }
    for name in ["durations.csv", "means.csv", "summary.json", "manifest.json"] {
        assert_eq!(read(&tmp.path().join("one").join(name)), read(&tmp.path().join("four").join(name)), "{name}");
    }
}

#[test]
fn cdf_writes_one_file_per_selector() {
    let tmp = tempfile::tempdir().unwrap();
    let o =
        cachehop(&["cdf", "--n", "8", "--drops", "4", "--algos", "greedy-pa,benchmark", "--set", "num_ues=40", "--out", "c"], tmp.path());
    assert!(o.status.success());
    let dir = tmp.path().join("c");
    for alg in ["greedy-pa", "benchmark"] {
        let text = read(&dir.join(format!("cdf_N8_{alg}.csv")));
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(",1"), "{last}");
        assert_eq!(text.lines().count(), 1 + 4 * 8);
    }
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cachehop"))
        .args(["run", "--n", "2", "--drops", "1", "--set", "num_ues=10"])
        .current_dir(tmp.path())
        .env("CACHEHOP_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from-env/manifest.json").exists());
}

#[test]
fn validate_reports_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.toml"), "").unwrap();
    let ok = cachehop(&["validate", "--config", "empty.toml", "--set", "zipf_gamma=0.5"], tmp.path());
    assert!(ok.status.success());
    let echoed = String::from_utf8(ok.stdout).unwrap();
    assert!(echoed.contains("zipf_gamma = 0.5"));
    assert!(echoed.contains("num_ues = 100"));

    std::fs::write(tmp.path().join("big.toml"), "num_requesting = 200\n").unwrap();
    let bad = cachehop(&["validate", "--config", "big.toml"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("N exceeds U"));

    let unknown = cachehop(&["validate", "--set", "no_such_key=1"], tmp.path());
    assert_eq!(unknown.status.code(), Some(2));

    let typed = cachehop(&["validate", "--set", "num_ues=many"], tmp.path());
    assert_eq!(typed.status.code(), Some(2));

    let missing = cachehop(&["validate", "--config", "nope.toml"], tmp.path());
    assert!(!missing.status.success());
    assert!(listing(tmp.path()).iter().all(|n| n.ends_with(".toml")));
}

#[test]
fn bad_flags_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cachehop(&["run", "--algos", "optimal", "--out", "x"], tmp.path());
    assert!(!o.status.success());
    let o = cachehop(&["sweep", "--out", "x"], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n"));
}
