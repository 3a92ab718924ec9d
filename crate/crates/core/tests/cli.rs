use std::process::Command;

use pircodex::cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["pircodex"];
    full.extend_from_slice(args);
    let status = cli::run(full, &mut out, &mut err);
    (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_temp(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join(format!("pircodex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const EXAMPLE_CODE: &str = "field: gf(2)\n5 3\n1 0 0 1 0\n0 1 0 1 0\n0 0 1 0 1\n";
const EXAMPLE_LAMBDA: &str = "3 2 5\n0 1 1 1 1\n1 0 0 1 1\n1 1 1 0 0\n";

#[test]
fn capacity_prints_exact_rational() {
    assert_eq!(run(&["capacity", "5", "3", "2"]), (0, "5/8 (0.625)\n".into(), String::new()));
    let (status, out, _) = run(&["capacity", "7", "4", "1", "--format", "json"]);
    assert_eq!(status, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["capacity"], "1");
    let (_, out, _) = run(&["--format", "csv", "capacity", "5", "3", "2"]);
    assert_eq!(out, "n,k,f,capacity\n5,3,2,5/8\n");
}

#[test]
fn classify_verdicts_and_exit_codes() {
    let (status, out, _) = run(&["classify", "--construct", "mds", "--n", "5", "--k", "3", "--field", "gf(5)"]);
    assert_eq!(status, 0);
    assert!(out.starts_with("capacity_achieving"));
    let code = write_temp("example.code", EXAMPLE_CODE);
    let (status, out, _) = run(&["classify", "--code", &code, "--format", "json"]);
    assert_eq!(status, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["classification"]["verdict"], "ruled_out");
    assert_eq!(v["classification"]["witness"]["s"], 2);
    assert_eq!(v["classification"]["witness"]["weight"], 3);
    assert_eq!(run(&["classify", "--code", &code, "--certify"]).0, 1);
}

#[test]
fn rate_validate_and_search() {
    let code = write_temp("example2.code", EXAMPLE_CODE);
    let lambda = write_temp("example.lambda", EXAMPLE_LAMBDA);
    let (status, out, _) = run(&["rate", "--code", &code, "--lambda", &lambda, "--files", "2"]);
    assert_eq!(status, 0);
    assert!(out.contains("27/50"), "{out}");
    assert_eq!(run(&["validate", "--code", &code, "--lambda", &lambda]).0, 0);
    assert_eq!(run(&["search", "--code", &code, "--kappa", "3", "--nu", "5"]).0, 1);
    assert_eq!(run(&["search", "--code", &code, "--kappa", "2", "--nu", "3"]).0, 0);
    let (status, out, _) = run(&["ghw", "--code", &code]);
    assert_eq!(status, 0);
    assert!(out.contains("d_2 = 3"));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--construct", "cyclic", "--n", "7", "--poly", "1,1,0,1", "--lambda", "cyclic", "--files", "2", "--seed", "9", "--format", "json"];
    let (status, first, _) = run(&args);
    assert_eq!(status, 0);
    let (_, second, _) = run(&args);
    assert_eq!(first, second);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["seed"], 9);
    for s in v["sessions"].as_array().unwrap() {
        assert_eq!(s["recovered"], true);
        assert_eq!(s["trace"]["download"], s["trace"]["expected_download"]);
    }
}

#[test]
fn usage_errors_exit_two() {
    let base = ["simulate", "--construct", "mds", "--n", "5", "--k", "3", "--field", "gf(5)", "--files", "2"];
    let mut args = base.to_vec();
    args.extend(["--stripes", "24"]);
    let (status, _, err) = run(&args);
    assert_eq!(status, 2);
    assert!(err.contains("β"));
    assert_eq!(run(&["capacity", "3", "5", "1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["classify", "--no-such-flag"]).0, 2);
    assert_eq!(run(&["classify"]).0, 2);
}

#[test]
fn audit_negative_control() {
    let code = write_temp("example3.code", EXAMPLE_CODE);
    let lambda = write_temp("example3.lambda", EXAMPLE_LAMBDA);
    let base = ["audit", "--code", &code, "--lambda", &lambda, "--files", "2", "--trials", "1000", "--seed", "5"];
    assert_eq!(run(&base).0, 0);
    let mut broken = base.to_vec();
    broken.extend(["--unshuffled", "2"]);
    assert_eq!(run(&broken).0, 1);
}

#[test]
fn every_subcommand_has_help() {
    let (status, top, _) = run(&["--help"]);
    assert_eq!(status, 0);
    for sub in ["capacity", "rate", "classify", "simulate", "audit", "scan", "ghw", "validate", "search"] {
        assert!(top.contains(sub), "{sub} missing from the listing");
        let (status, out, _) = run(&[sub, "--help"]);
        assert_eq!(status, 0, "{sub}");
        assert!(out.contains("Usage"), "{sub}");
    }
}

#[test]
fn binary_exit_status_and_seed_env() {
    let bin = env!("CARGO_BIN_EXE_pircodex");
    let out = Command::new(bin).args(["capacity", "5", "3", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "5/8 (0.625)\n");
    let out = Command::new(bin).args(["capacity", "0", "0", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin)
        .args(["simulate", "--construct", "repetition", "--n", "3", "--files", "1", "--format", "json"])
        .env("PIRCODEX_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 77);
}
