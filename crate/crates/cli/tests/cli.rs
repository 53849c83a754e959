use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fkgas"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).env_remove("FKGAS_SEED").env_remove("FKGAS_REPLICAS").output().unwrap()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(
        &p,
        format!(
            "seed = 5\nreplicas = 3\n[sampler]\nsamples = 100\n[oracle]\nsamples_per_term = 2000\ntolerance = 0.2\n{extra}"
        ),
    )
    .unwrap();
    p
}

fn records(out: &Path) -> String {
    fs::read_to_string(out.join("records.jsonl")).unwrap()
}

#[test]
fn verify_passes_on_the_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("default.toml");
    let o = run(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    println!("{stdout}");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout.matches("[PASS]").count(), 12);
}

#[test]
fn same_seed_gives_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let c = cfg.to_str().unwrap();
    for cmd in ["sample", "equivalence"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        assert!(run(&[cmd, "--config", c], &a).status.success());
        let o = bin()
            .args([cmd, "--config", c, "--out"])
            .arg(&b)
            .env("RAYON_NUM_THREADS", "1")
            .env_remove("FKGAS_SEED")
            .env_remove("FKGAS_REPLICAS")
            .output()
            .unwrap();
        assert!(o.status.success());
        assert_eq!(records(&a), records(&b), "{cmd}");
    }
    let a = fs::read(dir.path().join("sample-a/configurations.jsonl")).unwrap();
    let b = fs::read(dir.path().join("sample-b/configurations.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn records_carry_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("o");
    let o = bin()
        .args(["sample", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(&out)
        .env("FKGAS_SEED", "99")
        .env("FKGAS_REPLICAS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = records(&out);
    let mut replicas = std::collections::BTreeSet::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["seed"], 99);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
        replicas.insert(v["replica"].to_string());
    }
    assert_eq!(replicas.len(), 3, "two replicas plus the pooled record");
    assert!(out.join("cycle_lengths.csv").exists());
    assert!(fs::read_to_string(out.join("cycle_lengths.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[model]\nbeta = 0.5\ntemperature = 3.0\n");
    let o = run(&["sample", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["error"], "config");
}

#[test]
fn out_of_range_parameter_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[model]\nbeta = -1.0\n");
    let o = run(&["sample", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_enumeration_is_a_budget_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[oracle]\nn_max = 6\nbudget = 1000.0\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["oracle", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_str(fs::read_to_string(out.join("error.json")).unwrap().trim()).unwrap();
    assert_eq!(err["exit_code"], 3);
}

#[test]
fn failed_check_exits_with_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // A tolerance no Monte Carlo estimate can meet.
    fs::write(&cfg, "[oracle]\nsamples_per_term = 500\ntolerance = 1e-12\n").unwrap();
    let o = run(&["equivalence", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(5));
}
