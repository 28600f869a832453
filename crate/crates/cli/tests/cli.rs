use std::path::Path;
use std::process::{Command, Output};

fn circlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circlab"))
        .args(args)
        .env("CIRCLAB_OUT", out)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn mcsp_lists_all_sixteen_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = circlab(&["mcsp", "--n", "2", "--basis", "aon"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("mcsp.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "#schema=circlab.mcsp.v1");
    assert_eq!(lines[1], "table_hex,table_bits,min_size");
    assert_eq!(lines.len(), 2 + 16);
    // every entry has a size and the constants are free
    assert!(lines[2..].iter().all(|l| !l.ends_with(',')));
    assert_eq!(lines[2], "0,0000,0");
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("mcsp.json"))).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["results"]["complete"], true);
}

#[test]
fn invalid_basis_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = circlab(&["mcsp", "--basis", "nand-only"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid basis"));
    let out = circlab(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn same_config_gives_identical_reports() {
    for args in [
        vec!["nw", "--samples", "8"],
        vec!["learn", "--trials", "4"],
        vec!["game", "--n", "2", "--size", "3"],
        vec!["bootstrap", "--n", "8", "--trials", "2"],
        vec!["natural", "--property", "zero-error", "--transform", "derandomize"],
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut with_seed = args.clone();
        with_seed.extend(["--seed", "42"]);
        assert!(circlab(&with_seed, a.path()).status.success());
        assert!(circlab(&with_seed, b.path()).status.success());
        let cmd = args[0];
        for ext in ["json", "csv"] {
            let file = format!("{cmd}.{ext}");
            assert_eq!(read(&a.path().join(&file)), read(&b.path().join(&file)), "{file}");
        }
    }
}

#[test]
fn seeds_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    assert!(circlab(&["nw", "--seed", "7"], dir.path()).status.success());
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("nw.json"))).unwrap();
    assert_eq!(json["master_seed"], 7);
    assert!(json["derived_seeds"]["nw-batch#0"].is_u64());
}

#[test]
fn flags_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 9\n[mcsp]\nn = 3\nbasis = \"xaon\"\n").unwrap();
    let out = circlab(&["mcsp", "--config", cfg.to_str().unwrap(), "--n", "2"], dir.path());
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("mcsp.json"))).unwrap();
    assert_eq!(json["config"]["n"], 2);
    assert_eq!(json["config"]["basis"], "xaon");
    assert_eq!(json["master_seed"], 9);
}

#[test]
fn contract_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = circlab(&["bootstrap", "--n", "6", "--corruption", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // the report is still written
    assert!(dir.path().join("bootstrap.csv").exists());
    let out = circlab(&["learn", "--mode", "reconstruct", "--gamma", "0.05"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bootstrap_reads_json_instances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("affine.json");
    std::fs::write(&inst, r#"{"family": "linear", "mask": [1, 0, 1, 1, 0, 1], "constant": true}"#).unwrap();
    let out = circlab(
        &["bootstrap", "--n", "6", "--learner", "perfect", "--instance", inst.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("bootstrap.json"))).unwrap();
    assert_eq!(json["results"]["exact"], 1);
}

#[test]
fn every_subcommand_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        vec!["counting"],
        vec!["compress", "--functions", "3"],
        vec!["natural", "--transform", "amplify"],
        vec!["game", "--bench"],
        vec!["learn", "--mode", "reconstruct"],
    ] {
        let out = circlab(&cmd, dir.path());
        assert!(out.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = read(&dir.path().join(format!("{}.csv", cmd[0])));
        assert_eq!(csv.lines().next().unwrap(), format!("#schema=circlab.{}.v1", cmd[0]));
    }
}
