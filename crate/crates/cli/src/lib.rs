//! Command-line front end: solve problem files, verify certificates, apply
//! transforms and replay the built-in fixtures.

pub mod problem_file;
pub mod report;
pub mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use lasserre::certify::{
    certificate_from_json, gradient_problem, square_problem, verify_certificate, ConeKind, Problem, Verdict,
};
use lasserre::relax::{default_threads, minimal_order, run_hierarchy, HierarchyOptions, Side};
use lasserre_sdp::SolveOptions;

use problem_file::{ProblemFile, SideChoice};
use report::{table, RunReport};
use suite::{run_suite, suite_table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_FATAL: i32 = 3;

/// Orders solved above the least admissible one when no range is given.
pub const DEFAULT_ORDER_SPAN: u32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lasserre", version, about = "Moment/SOS relaxations and exact certificates for polynomial programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Qmodule,
    Preordering,
}

impl From<KindArg> for ConeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Qmodule => ConeKind::QuadraticModule,
            KindArg::Preordering => ConeKind::Preordering,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Moment,
    Sos,
    Both,
}

impl From<SideArg> for SideChoice {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Moment => SideChoice::Moment,
            SideArg::Sos => SideChoice::Sos,
            SideArg::Both => SideChoice::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    /// Replace the equalities by the sum of their squares.
    SquareEq,
    /// Minimize over the critical points `∇f = 0`.
    Grad,
    /// Minimize over `‖∇f‖² = 0`.
    GradSq,
}

impl TransformMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformMode::SquareEq => "square-eq",
            TransformMode::Grad => "grad",
            TransformMode::GradSq => "grad-sq",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub tol_gap: Option<f64>,
    #[arg(long)]
    pub tol_feas: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Seed for the random combination used in minimizer extraction.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the relaxation hierarchy on a problem file.
    Solve {
        file: PathBuf,
        #[arg(long)]
        order_min: Option<u32>,
        #[arg(long)]
        order_max: Option<u32>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        /// Transform the problem before solving.
        #[arg(long, value_enum)]
        transform: Option<TransformMode>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Orders solved concurrently; defaults to LASSERRE_THREADS or the core count.
        #[arg(long)]
        threads: Option<usize>,
        /// Stop once the moment side is flat and its bound has stabilized.
        #[arg(long)]
        stop_early: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a rational certificate against a problem file.
    Verify { problem: PathBuf, certificate: PathBuf },
    /// Write a transformed problem file.
    Transform {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: TransformMode,
        /// Output path; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Replay the built-in fixtures.
    Suite {
        /// Fixture names to run; all when omitted.
        #[arg(long)]
        only: Vec<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn parse_failure(message: String) -> Failure {
    Failure {
        code: EXIT_PARSE,
        message,
    }
}

fn fatal(message: String) -> Failure {
    Failure {
        code: EXIT_FATAL,
        message,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| parse_failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, Failure> {
    let text = read(path)?;
    ProblemFile::parse(&text).map_err(|e| parse_failure(format!("{}: {e}", path.display())))
}

/// Applies `mode`; the gradient modes keep any inequalities and reject equalities.
pub fn transform(prob: &Problem, mode: TransformMode) -> Result<Problem, String> {
    match mode {
        TransformMode::SquareEq => square_problem(prob).map_err(|e| e.to_string()),
        TransformMode::Grad | TransformMode::GradSq => {
            if !prob.equalities().is_empty() {
                return Err(format!("{} needs a problem without equalities", mode.as_str()));
            }
            let grad = gradient_problem(prob.objective(), mode == TransformMode::GradSq);
            let roots = grad.square_roots(0).map(<[_]>::to_vec);
            let out = Problem::new(
                prob.objective().clone(),
                grad.equalities().to_vec(),
                prob.inequalities().to_vec(),
            )
            .map_err(|e| e.to_string())?;
            match roots {
                Some(r) => out.with_square_roots(0, r).map_err(|e| e.to_string()),
                None => Ok(out),
            }
        }
    }
}

fn solver_options(args: &SolverArgs, file: Option<&problem_file::FileOptions>) -> SolveOptions {
    let mut s = SolveOptions::default();
    if let Some(o) = file {
        s.tol_gap = o.tol_gap.unwrap_or(s.tol_gap);
        s.tol_feas = o.tol_feas.unwrap_or(s.tol_feas);
        s.max_iter = o.max_iter.unwrap_or(s.max_iter);
    }
    s.tol_gap = args.tol_gap.unwrap_or(s.tol_gap);
    s.tol_feas = args.tol_feas.unwrap_or(s.tol_feas);
    s.max_iter = args.max_iter.unwrap_or(s.max_iter);
    s
}

/// Runs one command, printing to standard output, and returns the exit code
/// or the failure to report.
pub fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Solve {
            file,
            order_min,
            order_max,
            kind,
            side,
            transform: mode,
            json,
            threads,
            stop_early,
            solver,
        } => {
            let mut pf = load_problem(&file)?;
            if let Some(mode) = mode {
                pf.problem = transform(&pf.problem, mode).map_err(parse_failure)?;
            }
            let k_least = minimal_order(&pf.problem);
            let (file_lo, file_hi) = pf.options.orders.unwrap_or((k_least, k_least + DEFAULT_ORDER_SPAN));
            let lo = order_min.unwrap_or(file_lo);
            let hi = order_max.unwrap_or(if order_min.is_some() && pf.options.orders.is_none() {
                lo + DEFAULT_ORDER_SPAN
            } else {
                file_hi
            });
            if lo > hi {
                return Err(parse_failure(format!("order range {lo}..{hi} is empty")));
            }
            let kind: ConeKind = kind
                .map(Into::into)
                .or(pf.options.kind)
                .unwrap_or(ConeKind::QuadraticModule);
            let side: SideChoice = side.map(Into::into).or(pf.options.side).unwrap_or(SideChoice::Both);
            let sides = match side {
                SideChoice::Moment => vec![Side::Moment],
                SideChoice::Sos => vec![Side::Sos],
                SideChoice::Both => vec![Side::Moment, Side::Sos],
            };
            let mut opts = HierarchyOptions::new(lo, hi, kind, sides);
            opts.solver = solver_options(&solver, Some(&pf.options));
            opts.seed = solver.seed;
            opts.threads = threads.filter(|&t| t > 0).unwrap_or_else(default_threads);
            opts.stop_early = stop_early;
            let start = Instant::now();
            let result = run_hierarchy(&pf.problem, &opts);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            print!("{}", table(&result.records));
            if let Some(k) = result.stabilized_at {
                println!("stabilized at k = {k}");
            }
            if let Some(path) = json {
                let report = RunReport::new(
                    &pf,
                    mode.map(|m| m.as_str().to_string()),
                    opts.seed,
                    opts.threads,
                    &result,
                    wall_ms,
                );
                write(&path, &report.to_json())?;
            }
            if !result.records.is_empty() && result.records.iter().all(|r| r.error.is_some() && r.bound.is_none()) {
                let first = result.records[0].error.clone().unwrap_or_default();
                return Err(fatal(format!("no order could be assembled: {first}")));
            }
            Ok(EXIT_OK)
        }
        Command::Verify { problem, certificate } => {
            let pf = load_problem(&problem)?;
            let text = read(&certificate)?;
            let cert = certificate_from_json(&text, pf.problem.n())
                .map_err(|e| parse_failure(format!("{}: {e}", certificate.display())))?;
            match verify_certificate(&pf.problem, &cert) {
                Verdict::Valid => {
                    println!("valid");
                    Ok(EXIT_OK)
                }
                Verdict::Invalid(reason) => {
                    println!("invalid ({reason})");
                    Ok(EXIT_INVALID)
                }
                Verdict::NumericallyValid { residual } => {
                    println!("numerically valid (residual {residual:e})");
                    Ok(EXIT_INVALID)
                }
            }
        }
        Command::Transform { file, mode, output } => {
            let pf = load_problem(&file)?;
            let problem = transform(&pf.problem, mode).map_err(parse_failure)?;
            let out = ProblemFile {
                problem,
                options: pf.options,
            }
            .to_string();
            match output {
                Some(path) => write(&path, &out)?,
                None => print!("{out}"),
            }
            Ok(EXIT_OK)
        }
        Command::Suite { only, json, solver } => {
            let opts = solver_options(&solver, None);
            let rows = run_suite(&only, &opts, solver.seed).map_err(parse_failure)?;
            print!("{}", suite_table(&rows));
            let failed = rows.iter().filter(|r| r.failed()).count();
            println!("{} of {} fixtures passed", rows.len() - failed, rows.len());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&serde_json::json!({
                    "schema": "lasserre-suite/1",
                    "rows": rows,
                }))
                .expect("suite rows serialize");
                write(&path, &text)?;
            }
            Ok(if failed == 0 { EXIT_OK } else { EXIT_INVALID })
        }
    }
}
