use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const RUN: &str = "\
n=16
alpha=0.05
c=1
mode=quasi_relativistic
t_end=0.2
cfl_safety=0.5
dt_max=0.05
record_every=1
seed=3
initial.kind=taylor_green
initial.amplitude=1.0
";

fn qrns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrns"))
        .args(args)
        .output()
        .expect("spawn qrns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

/// Column `col` of every data row of a CSV.
fn column(csv: &str, col: usize) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().to_owned())
        .collect()
}

#[test]
fn simulate_writes_artifacts_and_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out_dir = path(dir.path(), "out");
    let out = qrns(&["simulate", "--config", &cfg, "--out", &out_dir]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in [
        "records.csv",
        "audit.csv",
        "summary.txt",
        "final.qrns",
        "config.txt",
    ] {
        assert!(dir.path().join("out").join(f).is_file(), "missing {f}");
    }
    let records = qrns::read_records(&dir.path().join("out/records.csv")).unwrap();
    assert!(records.len() >= 5);
    assert!(records.iter().all(|r| r.max_speed < 1.0));
    let audit = fs::read_to_string(dir.path().join("out/audit.csv")).unwrap();
    assert!(column(&audit, 1).iter().all(|p| p == "PASS"), "{audit}");
    assert!(stdout(&out).contains("speed_bound"));
}

#[test]
fn simulate_restart_from_final_snapshot() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let first = path(dir.path(), "first");
    assert_eq!(
        code(&qrns(&["simulate", "--config", &cfg, "--out", &first])),
        0
    );
    let snap = qrns::read_snapshot(&dir.path().join("first/final.qrns")).unwrap();
    assert!(snap.meta.time >= 0.2);
    let restart = RUN.replace(
        "initial.kind=taylor_green\ninitial.amplitude=1.0\n",
        "initial.kind=from_snapshot\ninitial.path=first/final.qrns\n",
    );
    let cfg2 = write_config(dir.path(), &restart);
    let out = qrns(&[
        "simulate",
        "--config",
        &cfg2,
        "--out",
        &path(dir.path(), "second"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let records = qrns::read_records(&dir.path().join("second/records.csv")).unwrap();
    assert_eq!(records[0].t, snap.meta.time);
}

#[test]
fn bad_config_value_exits_1_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &RUN.replace("alpha=0.05", "alpha=-1"));
    let out = qrns(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &path(dir.path(), "o"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn unknown_mode_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &RUN.replace("mode=quasi_relativistic", "mode=warp"),
    );
    let out = qrns(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &path(dir.path(), "o"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("warp"), "{}", stderr(&out));
}

#[test]
fn missing_config_file_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = qrns(&[
        "simulate",
        "--config",
        &path(dir.path(), "nope.cfg"),
        "--out",
        &path(dir.path(), "o"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nope.cfg"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&qrns(&["bogus"])), 1);
    assert_eq!(code(&qrns(&["simulate"])), 1);
    assert_eq!(
        code(&qrns(&["lipschitz-check", "--samples", "ten", "--c", "1"])),
        1
    );
    assert_eq!(code(&qrns(&["--help"])), 0);
}

#[test]
fn verify_zero_trajectory_has_zero_margins() {
    let dir = TempDir::new().unwrap();
    let mut csv =
        String::from("t,dt,l2_sq,h1_semi_sq,h2_sq,b_uuu,f_l2_sq,f_vdual_sq,work,max_speed\n");
    for (t, dt) in [(0.0, 0.0), (0.5, 0.5), (1.0, 0.5)] {
        csv.push_str(&format!("{t:.16e},{dt:.16e},0,0,0,0,0,0,0,0\n"));
    }
    let records = path(dir.path(), "zero.csv");
    fs::write(&records, csv).unwrap();
    let audit_dir = path(dir.path(), "audit");
    let out = qrns(&[
        "verify",
        "--records",
        &records,
        "--alpha",
        "0.1",
        "--c",
        "1",
        "--out",
        &audit_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let audit = fs::read_to_string(dir.path().join("audit/audit.csv")).unwrap();
    assert!(column(&audit, 1).iter().all(|p| p == "PASS"));
    for m in column(&audit, 2) {
        assert_eq!(m.parse::<f64>().unwrap(), 0.0, "{audit}");
    }
}

#[test]
fn verify_flags_energy_growth() {
    let dir = TempDir::new().unwrap();
    let mut csv =
        String::from("t,dt,l2_sq,h1_semi_sq,h2_sq,b_uuu,f_l2_sq,f_vdual_sq,work,max_speed\n");
    // unforced energy that doubles within 10⁻³ time units
    csv.push_str("0,0,1,1,1,0,0,0,0,0.5\n0.001,0.001,2,1,1,0,0,0,0,0.5\n");
    let records = path(dir.path(), "bad.csv");
    fs::write(&records, csv).unwrap();
    let out = qrns(&[
        "verify",
        "--records",
        &records,
        "--alpha",
        "0.1",
        "--c",
        "1",
    ]);
    assert_eq!(code(&out), 2, "{}", stdout(&out));
    assert!(stdout(&out).contains("energy_inequality      FAIL"));
}

#[test]
fn verify_needs_alpha_and_c() {
    let dir = TempDir::new().unwrap();
    let records = path(dir.path(), "r.csv");
    fs::write(&records, "t,dt,l2_sq,h1_semi_sq,h2_sq,b_uuu,f_l2_sq,f_vdual_sq,work,max_speed\n0,0,0,0,0,0,0,0,0,0\n")
        .unwrap();
    let out = qrns(&["verify", "--records", &records, "--alpha", "0.1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_reads_sibling_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out_dir = path(dir.path(), "out");
    assert_eq!(
        code(&qrns(&["simulate", "--config", &cfg, "--out", &out_dir])),
        0
    );
    let out = qrns(&["verify", "--records", &path(dir.path(), "out/records.csv")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("trilinear_bound"));
}

#[test]
fn verify_runs_config_without_records() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out = qrns(&["verify", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("6 audits, 0 failed"));
}

#[test]
fn compare_runs_both_modes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out = qrns(&[
        "compare",
        "--config",
        &cfg,
        "--out",
        &path(dir.path(), "cmp"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let diff = fs::read_to_string(dir.path().join("cmp/difference.csv")).unwrap();
    let d: Vec<f64> = column(&diff, 1)
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(d[0], 0.0);
    assert!(d[d.len() - 1] > 0.0);
    let c = qrns::read_records(&dir.path().join("cmp/classical_records.csv")).unwrap();
    let q = qrns::read_records(&dir.path().join("cmp/quasi_relativistic_records.csv")).unwrap();
    assert_eq!(c.len(), q.len());
    assert!(c.iter().zip(&q).all(|(a, b)| a.t == b.t));
}

#[test]
fn tiny_budget_is_incomplete() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out = qrns(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &path(dir.path(), "o"),
        "--budget-seconds",
        "1e-9",
    ]);
    assert_eq!(code(&out), 1);
    let summary = fs::read_to_string(dir.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("INCOMPLETE"));
    assert!(dir.path().join("o/records.csv").is_file());
}

#[test]
fn lipschitz_check_passes() {
    let out = qrns(&[
        "lipschitz-check",
        "--samples",
        "20000",
        "--c",
        "1e-3,1,1e3",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(stdout(&out).matches("PASS").count(), 3);
}

#[test]
fn converge_small_lists() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out = qrns(&[
        "converge",
        "--config",
        &cfg,
        "--n-list",
        "16,32",
        "--jobs",
        "2",
        "--out",
        &path(dir.path(), "cv"),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("cv/convergence.csv")).unwrap();
    assert_eq!(column(&csv, 0), ["16", "32"]);
    assert_eq!(
        code(&qrns(&[
            "converge", "--config", &cfg, "--n-list", "8", "--jobs", "0"
        ])),
        1
    );
}

#[test]
fn consistency_slope_near_minus_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let out = qrns(&[
        "consistency",
        "--config",
        &cfg,
        "--c-list",
        "10,100,1000",
        "--jobs",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("consistency: PASS"));
    let out = qrns(&["consistency", "--config", &cfg, "--c-list", "10,20"]);
    assert_eq!(code(&out), 1);
}
