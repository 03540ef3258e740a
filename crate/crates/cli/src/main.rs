//! `cmg`: run conformal-germ, curvature and index checks and write reports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! or configuration errors, 3 for domain errors raised by the computation.

mod commands;
mod config;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cmg_core::Exec;

use crate::commands::{Ctx, Outcome};
use crate::config::{BumpChoice, Expectation, Overrides};
use crate::report::{Diagnostic, RunReport};

#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Domain(cmg_core::Error),
    Io(anyhow::Error),
}

impl From<cmg_core::Error> for Failure {
    fn from(e: cmg_core::Error) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Parse(_) | Failure::Io(_) => 2,
            Failure::Domain(_) => 3,
        }
    }

    fn diagnostic(&self) -> Diagnostic {
        match self {
            Failure::Parse(m) => Diagnostic { kind: "parse", message: m.clone() },
            Failure::Domain(e) => Diagnostic { kind: "domain", message: e.to_string() },
            Failure::Io(e) => Diagnostic { kind: "io", message: format!("{e:#}") },
        }
    }
}

#[derive(Parser)]
#[command(name = "cmg", version, about = "Checks for conformal Morse germs and the curvature they control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a germ is a conformal Morse germ
    VerifyCmg(Args),
    /// Compare sectional curvature with the germ-based formulas at a point
    Curvature(Args),
    /// Max, min and oscillation of sectional curvature over the planes at a point
    Osc(Args),
    /// Poincaré–Hopf index of the gradient at the germ's base point
    Index(Args),
    /// Scan a chart ball for constant sectional curvature
    ScanSchur(Args),
    /// Conformality defect and curvature oscillation along a perturbed family
    SweepQc(Args),
    /// Run the full invariant suite
    Selftest(Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyCmg(_) => "verify-cmg",
            Command::Curvature(_) => "curvature",
            Command::Osc(_) => "osc",
            Command::Index(_) => "index",
            Command::ScanSchur(_) => "scan-schur",
            Command::SweepQc(_) => "sweep-qc",
            Command::Selftest(_) => "selftest",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::VerifyCmg(a)
            | Command::Curvature(a)
            | Command::Osc(a)
            | Command::Index(a)
            | Command::ScanSchur(a)
            | Command::SweepQc(a)
            | Command::Selftest(a) => a,
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
struct Args {
    /// TOML file with a catalog entry and check settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// euclidean | sphere | hyperbolic | revolution:<phi> | product:<a>x<b> | perturbed:<model>
    #[arg(long)]
    space: Option<String>,
    /// curvature parameter of the model spaces
    #[arg(long)]
    c: Option<f64>,
    /// dimension of the model spaces
    #[arg(long)]
    n: Option<usize>,
    /// perturbation size
    #[arg(long)]
    eps: Option<f64>,
    /// model | saddle2d | quadratic:<k>
    #[arg(long)]
    germ: Option<String>,
    /// comma-separated chart coordinates
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// sphere radius for the index
    #[arg(long)]
    radius: Option<f64>,
    /// comma-separated perturbation sizes for the sweep
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    bump: Option<BumpChoice>,
    /// orthonormal pairs sampled per curvature oscillation
    #[arg(long)]
    samples: Option<usize>,
    /// points in the constancy scan
    #[arg(long)]
    count: Option<usize>,
    /// multiplies every tolerance
    #[arg(long)]
    tol_scale: Option<f64>,
    /// expected verdict of the constancy scan
    #[arg(long, value_enum)]
    expect: Option<Expectation>,
    /// worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// report directory (default: $CMG_REPORT_DIR, then ./reports)
    #[arg(long)]
    out: Option<PathBuf>,
    /// record wall time in the report
    #[arg(long)]
    timing: bool,
}

impl Args {
    fn overrides(&self) -> Overrides {
        Overrides {
            space: self.space.clone(),
            n: self.n,
            c: self.c,
            eps: self.eps,
            germ: self.germ.clone(),
            point: self.point.clone(),
            radius: self.radius,
            grid: self.grid.clone(),
            bump: self.bump,
            samples: self.samples,
            count: self.count,
            tol_scale: self.tol_scale,
            expect: self.expect,
        }
    }
}

fn execute(command: &Command, args: &Args) -> Result<(serde_json::Value, Outcome), Failure> {
    let file = config::load(args.config.as_deref())?;
    let resolved = config::resolve(file, args.overrides())?;
    let inputs = serde_json::to_value(&resolved).map_err(|e| Failure::Io(e.into()))?;
    let exec = if args.threads == Some(1) { Exec::Sequential } else { Exec::Parallel };
    let ctx = Ctx { resolved, exec };
    let outcome = match command {
        Command::VerifyCmg(_) => commands::verify_cmg(&ctx),
        Command::Curvature(_) => commands::curvature(&ctx),
        Command::Osc(_) => commands::osc(&ctx),
        Command::Index(_) => commands::index(&ctx),
        Command::ScanSchur(_) => commands::scan_schur(&ctx),
        Command::SweepQc(_) => commands::sweep_qc(&ctx),
        Command::Selftest(_) => selftest::run(&ctx),
    }?;
    Ok((inputs, outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args().clone();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let result = execute(&cli.command, &args);
    let wall_time_s = args.timing.then(|| start.elapsed().as_secs_f64());
    let mut report = RunReport {
        schema: report::SCHEMA,
        toolkit_version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        inputs: serde_json::Value::Null,
        results: serde_json::Value::Null,
        checks: Vec::new(),
        passed: false,
        error: None,
        wall_time_s,
    };
    let (code, table) = match result {
        Ok((inputs, outcome)) => {
            report.inputs = inputs;
            report.results = outcome.results;
            report.passed = outcome.checks.iter().all(|c| c.passed);
            report.checks = outcome.checks;
            (if report.passed { 0 } else { 1 }, outcome.table)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.diagnostic().message);
            report.error = Some(failure.diagnostic());
            (failure.exit_code(), None)
        }
    };
    for c in &report.checks {
        let bound = c.expected.unwrap_or(c.tolerance);
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {} = {:e} ({} {:e})", c.name, c.value, c.relation, bound);
    }
    let dir = report::report_dir(args.out.as_deref());
    match report::write(&dir, &report, table.as_ref()) {
        Ok(path) => println!("report: {}", path.display()),
        Err(e) => {
            eprintln!("error: cannot write report to {}: {e:#}", dir.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
