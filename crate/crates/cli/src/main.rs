//! `qrns`: run, audit and study the quasi-relativistic Navier–Stokes solver.
//!
//! Exit codes: 0 on success with every audit passing, 1 on usage,
//! configuration or I/O errors (and wall-clock budget stops), 2 when an audit
//! fails or a run blows up.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use qrns::diagnostics::l2_distance;
use qrns::io::{
    format_audits, format_config, format_records, format_summary, load_config, write_atomic,
};
use qrns::{
    convergence_study, lipschitz_sweep, low_speed_consistency, read_records, run_audits,
    write_snapshot, AuditResult, ConvectionMode, EnergyRecord, Error, RunOptions, RunOutput,
    RunStatus, SimConfig, SimState, SnapshotMeta, Solver,
};

#[derive(Parser, Debug)]
#[command(
    name = "qrns",
    version,
    about = "Quasi-relativistic Navier-Stokes solver and estimate audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and audit its energy records.
    Simulate(SimulateArgs),
    /// Run a configuration in both modes on a shared step sequence.
    Compare(CompareArgs),
    /// Audit an existing records CSV, or run a configuration and audit it.
    Verify(VerifyArgs),
    /// Self-convergence study against a run at twice the finest resolution.
    Converge(ConvergeArgs),
    /// Distance to the classical solution as c grows.
    Consistency(ConsistencyArgs),
    /// Sample the Lipschitz bound of the relativistic map.
    LipschitzCheck(LipschitzArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Stop after this many wall-clock seconds and write partial output.
    #[arg(long)]
    budget_seconds: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Records CSV to audit; without it the configuration is run first.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Supplies alpha, c and mode.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Adds the speed and trilinear audits when `quasi_relativistic`.
    #[arg(long)]
    mode: Option<ConvectionMode>,
    /// Directory for audit.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated resolutions, e.g. 16,32,64.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for convergence.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConsistencyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated speeds of light, e.g. 10,100,1000.
    #[arg(long, value_delimiter = ',', required = true)]
    c_list: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for consistency.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LipschitzArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Comma-separated speeds of light.
    #[arg(long = "c", alias = "c-list", value_delimiter = ',', required = true)]
    c_list: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BlowUp { .. } => Failure::Audit(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Converge(a) => converge_cmd(a),
        Command::Consistency(a) => consistency_cmd(a),
        Command::LipschitzCheck(a) => lipschitz_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Audit(m)) => {
            eprintln!("FAIL: {m}");
            ExitCode::from(2)
        }
    }
}

/// Prefixes an error with the file it came from.
fn at(path: &Path, e: Error) -> Failure {
    match Failure::from(e) {
        Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
        f => f,
    }
}

fn config_at(path: &Path) -> Result<SimConfig, Failure> {
    load_config(path).map_err(|e| at(path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    write_atomic(&dir.join(name), text.as_bytes()).map_err(Failure::from)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

/// Audits with fewer than two records have nothing to integrate and are skipped.
fn audits_for(
    records: &[EnergyRecord],
    cfg: &SimConfig,
) -> Result<Option<Vec<AuditResult>>, Failure> {
    if records.len() < 2 {
        return Ok(None);
    }
    Ok(Some(run_audits(
        records,
        cfg.params.alpha,
        cfg.params.c,
        cfg.mode,
    )?))
}

fn status_line(out: &RunOutput<f64>) -> String {
    match out.status {
        RunStatus::Complete => format!(
            "status: complete at t={:e} after {} steps",
            out.state.t, out.state.step_index
        ),
        RunStatus::BudgetExceeded => format!(
            "status: INCOMPLETE, wall-clock budget exceeded at t={:e} after {} steps",
            out.state.t, out.state.step_index
        ),
        RunStatus::BlowUp { t, step, max_speed } => {
            format!("status: BLOW-UP at t={t:e}, step {step}, max|u|={max_speed:e}")
        }
    }
}

/// Writes records, audits, summary and (unless blown up) the final snapshot
/// for one run into `dir` with file names prefixed by `prefix`.
fn write_run(
    dir: &Path,
    prefix: &str,
    cfg: &SimConfig,
    out: &RunOutput<f64>,
) -> Result<String, Failure> {
    write_text(
        dir,
        &format!("{prefix}records.csv"),
        &format_records(&out.records),
    )?;
    let mut summary = format!("mode: {}\n{}\n", cfg.mode, status_line(out));
    match audits_for(&out.records, cfg)? {
        Some(audits) => {
            write_text(dir, &format!("{prefix}audit.csv"), &format_audits(&audits))?;
            summary.push_str(&format_summary(&audits));
            if audits.iter().any(|a| !a.pass) {
                summary.push_str("result: AUDIT FAIL\n");
            }
        }
        None => summary.push_str("audits skipped: fewer than two records\n"),
    }
    if !matches!(out.status, RunStatus::BlowUp { .. }) {
        let meta = SnapshotMeta {
            time: out.state.t,
            mode: cfg.mode,
            c: cfg.params.c,
            alpha: cfg.params.alpha,
        };
        write_snapshot(
            &out.state.u,
            &meta,
            &dir.join(format!("{prefix}final.qrns")),
        )?;
    }
    write_text(dir, &format!("{prefix}summary.txt"), &summary)?;
    Ok(summary)
}

fn outcome(summary: &str, out: &RunOutput<f64>) -> CmdResult {
    match out.status {
        RunStatus::BlowUp { .. } => Err(Failure::Audit(status_line(out))),
        RunStatus::BudgetExceeded => Err(Failure::Usage(status_line(out))),
        RunStatus::Complete if summary.contains("AUDIT FAIL") => {
            Err(Failure::Audit("one or more audits failed".into()))
        }
        RunStatus::Complete => Ok(()),
    }
}

fn simulate_cmd(a: SimulateArgs) -> CmdResult {
    let cfg = config_at(&a.config)?;
    let budget = match a.budget_seconds {
        Some(s) if !(s.is_finite() && s > 0.0) => {
            return Err(Failure::Usage(format!(
                "--budget-seconds must be positive, got {s}"
            )))
        }
        s => s.map(Duration::from_secs_f64),
    };
    create_dir(&a.out)?;
    if let Ok(text) = format_config(&cfg) {
        write_text(&a.out, "config.txt", &text)?;
    }
    let out = qrns::simulate(
        &cfg,
        &RunOptions {
            budget,
            dt_schedule: None,
        },
    )?;
    let summary = write_run(&a.out, "", &cfg, &out)?;
    print!("{summary}");
    outcome(&summary, &out)
}

fn compare_cmd(a: CompareArgs) -> CmdResult {
    let base = config_at(&a.config)?;
    create_dir(&a.out)?;
    let mut cfgs = [base.clone(), base.clone()];
    cfgs[0].mode = ConvectionMode::Classical;
    cfgs[1].mode = ConvectionMode::QuasiRelativistic;
    let mut solvers = [Solver::<f64>::new(&cfgs[0])?, Solver::<f64>::new(&cfgs[1])?];
    let mut states: [SimState<f64>; 2] = [solvers[0].initial_state()?, solvers[1].initial_state()?];
    let mut records: [Vec<EnergyRecord>; 2] = [
        vec![solvers[0].record(&states[0])?],
        vec![solvers[1].record(&states[1])?],
    ];
    let mut dts = Vec::new();
    let mut diff = String::from("t,diff_l2\n");
    let _ = writeln!(
        diff,
        "{:.16e},{:.16e}",
        states[0].t,
        l2_distance(&states[0].u, &states[1].u)
    );
    let mut status = RunStatus::Complete;
    'outer: while states[0].t < base.t_end {
        let dt = solvers[0]
            .cfl_dt(&states[0].u)
            .min(solvers[1].cfl_dt(&states[1].u));
        for i in 0..2 {
            match solvers[i].step_fixed(&states[i], dt) {
                Ok(s) => states[i] = s,
                Err(Error::BlowUp { t, step, max_speed }) => {
                    status = RunStatus::BlowUp { t, step, max_speed };
                    break 'outer;
                }
                Err(e) => return Err(e.into()),
            }
        }
        dts.push(dt);
        if states[0].t >= base.t_end || states[0].step_index.is_multiple_of(base.record_every) {
            for i in 0..2 {
                records[i].push(solvers[i].record(&states[i])?);
            }
            let _ = writeln!(
                diff,
                "{:.16e},{:.16e}",
                states[0].t,
                l2_distance(&states[0].u, &states[1].u)
            );
        }
    }
    write_text(&a.out, "difference.csv", &diff)?;
    let mut summary = String::new();
    let mut failed = false;
    for (i, prefix) in ["classical_", "quasi_relativistic_"]
        .into_iter()
        .enumerate()
    {
        let out = RunOutput {
            state: states[i].clone(),
            records: std::mem::take(&mut records[i]),
            dts: dts.clone(),
            status: status.clone(),
        };
        let s = write_run(&a.out, prefix, &cfgs[i], &out)?;
        failed |= outcome(&s, &out).is_err();
        summary.push_str(&s);
    }
    let _ = writeln!(
        summary,
        "final ||u_classical - u_qr|| = {:.6e}",
        l2_distance(&states[0].u, &states[1].u)
    );
    print!("{summary}");
    if failed {
        return Err(Failure::Audit("compare: audit failure or blow-up".into()));
    }
    Ok(())
}

/// Picks `(alpha, c, mode)`: explicit flags win over `--config`, which wins
/// over a `config.txt` next to the records file. The mode defaults to
/// classical, which audits only mode-independent quantities.
fn verify_params(a: &VerifyArgs) -> Result<(f64, f64, ConvectionMode), Failure> {
    let sibling = a
        .records
        .as_ref()
        .and_then(|r| r.parent().map(|d| d.join("config.txt")))
        .filter(|p| p.is_file());
    let cfg = match a.config.as_ref().or(sibling.as_ref()) {
        Some(p) => Some(config_at(p)?),
        None => None,
    };
    let alpha = a.alpha.or(cfg.as_ref().map(|c| c.params.alpha));
    let c = a.c.or(cfg.as_ref().map(|c| c.params.c));
    let mode = a
        .mode
        .or(cfg.as_ref().map(|c| c.mode))
        .unwrap_or(ConvectionMode::Classical);
    match (alpha, c) {
        (Some(alpha), Some(c)) => Ok((alpha, c, mode)),
        _ => Err(Failure::Usage(
            "alpha and c are required: pass --alpha and --c, or --config".into(),
        )),
    }
}

fn verify_cmd(a: VerifyArgs) -> CmdResult {
    let (records, alpha, c, mode) = match &a.records {
        Some(path) => {
            let records = read_records(path).map_err(|e| at(path, e))?;
            let (alpha, c, mode) = verify_params(&a)?;
            (records, alpha, c, mode)
        }
        None => {
            let path = a
                .config
                .as_ref()
                .ok_or_else(|| Failure::Usage("verify needs --records or --config".into()))?;
            let mut cfg = config_at(path)?;
            if let Some(m) = a.mode {
                cfg.mode = m;
            }
            let out = qrns::simulate(&cfg, &RunOptions::default())?;
            if let RunStatus::BlowUp { .. } = out.status {
                return Err(Failure::Audit(status_line(&out)));
            }
            (out.records, cfg.params.alpha, cfg.params.c, cfg.mode)
        }
    };
    let audits = run_audits(&records, alpha, c, mode)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_text(dir, "audit.csv", &format_audits(&audits))?;
    }
    print!("{}", format_summary(&audits));
    if audits.iter().any(|r| !r.pass) {
        return Err(Failure::Audit("one or more audits failed".into()));
    }
    Ok(())
}

fn check_jobs(jobs: usize) -> Result<(), Failure> {
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    Ok(())
}

fn converge_cmd(a: ConvergeArgs) -> CmdResult {
    check_jobs(a.jobs)?;
    let cfg = config_at(&a.config)?;
    let table = convergence_study(&cfg, &a.n_list, a.jobs)?;
    let mut csv = String::from("n,error,ratio\n");
    for r in &table.rows {
        let ratio = r.ratio.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let _ = writeln!(csv, "{},{:.16e},{}", r.n, r.error, ratio);
    }
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_text(dir, "convergence.csv", &csv)?;
    }
    println!(
        "reference n={} ||u_ref||={:.6e} floor={:.3e}",
        table.reference_n, table.reference_l2, table.floor
    );
    for r in &table.rows {
        match r.ratio {
            Some(q) => println!("n={:<5} error={:.6e} ratio={:.3e}", r.n, r.error, q),
            None => println!("n={:<5} error={:.6e}", r.n, r.error),
        }
    }
    println!("convergence: {}", if table.pass { "PASS" } else { "FAIL" });
    if !table.pass {
        return Err(Failure::Audit("convergence ratios below 10".into()));
    }
    Ok(())
}

fn consistency_cmd(a: ConsistencyArgs) -> CmdResult {
    check_jobs(a.jobs)?;
    let cfg = config_at(&a.config)?;
    let report = low_speed_consistency(&cfg, &a.c_list, a.jobs)?;
    let mut csv = String::from("c,distance\n");
    for &(c, d) in &report.points {
        let _ = writeln!(csv, "{c:.16e},{d:.16e}");
    }
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_text(dir, "consistency.csv", &csv)?;
    }
    for &(c, d) in &report.points {
        println!("c={c:<12e} ||u_c - u_classical||={d:.6e}");
    }
    println!(
        "slope={:.6} consistency: {}",
        report.slope,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if !report.pass {
        return Err(Failure::Audit(format!(
            "slope {} outside [-2.3, -1.7]",
            report.slope
        )));
    }
    Ok(())
}

fn lipschitz_cmd(a: LipschitzArgs) -> CmdResult {
    let mut failed = false;
    for &c in &a.c_list {
        let s = lipschitz_sweep(a.samples, c, a.seed);
        println!(
            "c={:e} samples={} violations={} velocity_violations={} max_ratio={:.6e} max_c_ratio={:.6e} {}",
            s.c,
            s.samples,
            s.violations,
            s.velocity_violations,
            s.max_ratio,
            s.max_scaled_ratio,
            if s.passed() { "PASS" } else { "FAIL" }
        );
        failed |= !s.passed();
    }
    if failed {
        return Err(Failure::Audit("Lipschitz bound violated".into()));
    }
    Ok(())
}
