use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhd-couette")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["no-such-command"])), 1);
    assert_eq!(code(&cli(&["linear-mode", "--k", "1"])), 1);
    assert_eq!(code(&cli(&["--help"])), 0);
}

#[test]
fn invalid_parameters_exit_with_one() {
    let o = cli(&["linear-mode", "--k", "1", "--eta", "0", "--nu", "1e-3", "--mu", "1e-4", "--beta", "1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nu"));
}

#[test]
fn weights_check_passes() {
    let o = cli(&["weights-check", "--samples", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("audit_name,"));
    assert!(out.contains(",pass"));
}

#[test]
fn audit_reports_the_failing_inequality() {
    let o = cli(&["audit", "--samples", "2000", "--seed", "4"]);
    assert_eq!(code(&o), 2);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("freq_ratio_pkp,") && l.ends_with(",fail")), "{out}");
}

#[test]
fn linear_mode_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mode.csv");
    let o = cli(&[
        "linear-mode", "--k", "1", "--eta", "5", "--nu", "1e-3", "--mu", "1e-3", "--beta", "1", "--t-end", "20",
        "--verify", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 10);
}

#[test]
fn simulate_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small smoke run\nnu = 1e-2\nmu = 1e-2\nbeta = 1\nnx = 16\nny = 16\neps = 1e-4\nt_end = 2\nsnapshot_times = 0, 1\nrun_id = smoke\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = cli(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["smoke_ledger.csv", "smoke_verdict.jsonl", "smoke_manifest.json", "smoke_t0.mhdc", "smoke_t1.mhdc"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let verdict = fs::read_to_string(out.join("smoke_verdict.jsonl")).unwrap();
    assert!(verdict.contains("\"verdict\":\"stable\""), "{verdict}");
    let ledger = fs::read_to_string(out.join("smoke_ledger.csv")).unwrap();
    assert!(ledger.starts_with("t,E_sym"));
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "nu = 1e-2\nmu = 1e-2\nbeta = 1\nbogus = 3\n").unwrap();
    let o = cli(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}
