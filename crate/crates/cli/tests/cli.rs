use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpi-isac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn help_succeeds_and_bad_usage_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(
        run(&["solve", "--scheme", "nope"], dir.path())
            .status
            .code(),
        Some(1)
    );
    let bad_axis = run(
        &["sweep", "--axis", "power_dbm", "--values", "30,28"],
        dir.path(),
    );
    assert_eq!(bad_axis.status.code(), Some(1));
}

#[test]
fn infeasible_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.toml");
    let mut spec = lpi_isac::harness::ExperimentSpec::for_profile(lpi_isac::Profile::Desk);
    spec.constraints.eta_dbm = spec.constraints.power_dbm + 10.0;
    spec.save(&cfg).unwrap();
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn solve_writes_metrics_and_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve", "--seed", "3", "--scheme", "proposed,comm-only"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("proposed-hbf: SE"));
    for name in [
        "metrics_proposed-hbf.json",
        "trace_comm-only-hbf.csv",
        "spectrum_proposed-hbf.csv",
        "config.toml",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let spec = lpi_isac::harness::ExperimentSpec::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(spec.seed, 3);
    let json = std::fs::read_to_string(dir.path().join("metrics_proposed-hbf.json")).unwrap();
    assert!(json.contains("\"se\""));
}

#[test]
fn sweep_accepts_negative_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sweep",
            "--axis",
            "zeta",
            "--values",
            "-10,0",
            "--trials",
            "1",
            "--scheme",
            "comm-only",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.contains("-10"));
}
