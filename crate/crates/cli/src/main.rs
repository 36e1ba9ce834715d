//! `conicert solve <file.cbf>`: solve a CBF instance and print a JSON result.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use conicert::model::{parse_cbf, preprocess, MiConicProblem, ModelError, SolveResult, SolveStatus};
use conicert::oa::{solve, Method, OaOptions};
use serde::{Deserialize, Serialize};

const EXIT_DECIDED: u8 = 0;
const EXIT_LIMIT: u8 = 2;
const EXIT_ERROR: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "conicert", version, about = "Mixed-integer conic solver by certificate-driven outer approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a CBF instance.
    Solve(SolveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Bb,
    Iter,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// CBF input file.
    file: PathBuf,
    #[arg(long, value_enum, default_value = "bb")]
    method: MethodArg,
    /// Relative optimality gap.
    #[arg(long)]
    rel_gap: Option<f64>,
    /// Constant in the gap denominator.
    #[arg(long)]
    gap_theta: Option<f64>,
    /// LP row relaxation.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    no_disaggregate: bool,
    #[arg(long)]
    no_initial_cuts: bool,
    #[arg(long)]
    no_separation: bool,
    #[arg(long)]
    no_scaling: bool,
    /// Disable the extended formulation for second-order cones.
    #[arg(long)]
    no_soc_ef: bool,
    /// Never solve conic subproblems (separation cuts only).
    #[arg(long)]
    no_certificate_cuts: bool,
    /// Solve the conic subproblem at fractional LP points too (bb only).
    #[arg(long)]
    fractional_subproblems: bool,
    #[arg(long)]
    soc_diamond_limit: Option<usize>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    iteration_limit: Option<usize>,
    #[arg(long)]
    tol_linear: Option<f64>,
    #[arg(long)]
    tol_soc_exp: Option<f64>,
    #[arg(long)]
    tol_psd: Option<f64>,
    #[arg(long)]
    cert_tol: Option<f64>,
    #[arg(long)]
    subsolver_max_iters: Option<usize>,
    /// Symmetric bound for integer columns lacking one.
    #[arg(long)]
    default_big_m: Option<i64>,
    /// Recorded in the output; the subsolver is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log level 0-3.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl SolveArgs {
    fn options(&self) -> OaOptions {
        let mut o = OaOptions {
            method: match self.method {
                MethodArg::Bb => Method::BranchAndBound,
                MethodArg::Iter => Method::Iterative,
            },
            use_disaggregation: !self.no_disaggregate,
            use_initial_cuts: !self.no_initial_cuts,
            use_separation: !self.no_separation,
            use_scaling: !self.no_scaling,
            use_soc_ef: !self.no_soc_ef,
            use_certificate_cuts: !self.no_certificate_cuts,
            solve_fractional_subproblems: self.fractional_subproblems,
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            ..OaOptions::default()
        };
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = self.$f { o.$g = v; })* };
        }
        set!(rel_gap => rel_gap, gap_theta => gap_theta, delta => delta, soc_diamond_limit => soc_full_diamond_limit,
             tol_linear => tol_linear, tol_soc_exp => tol_soc_exp, tol_psd => tol_psd, cert_tol => cert_tol,
             subsolver_max_iters => subsolver_max_iters);
        if self.iteration_limit.is_some() {
            o.iteration_limit = self.iteration_limit;
        }
        o
    }
}

/// The JSON result document.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct Report {
    status: SolveStatus,
    /// Minimization form, offset included.
    objective: Option<f64>,
    /// In the input's sense.
    original_objective: Option<f64>,
    sense: String,
    bound: Option<f64>,
    rel_gap: Option<f64>,
    /// Input variable order.
    solution: Option<Vec<f64>>,
    nodes: usize,
    subproblems: usize,
    iterations: usize,
    time_seconds: f64,
    message: Option<String>,
    options_echo: OptionsEcho,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct OptionsEcho {
    file: String,
    seed: u64,
    default_big_m: Option<i64>,
    #[serde(flatten)]
    oa: OaOptions,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn report(p: &MiConicProblem, r: &SolveResult, opts: &OaOptions, echo: OptionsEcho, secs: f64) -> Report {
    Report {
        status: r.status,
        objective: finite(r.upper_bound),
        original_objective: finite(r.upper_bound).map(|v| p.original_objective(v)),
        sense: if p.maximize { "max" } else { "min" }.into(),
        bound: finite(r.lower_bound),
        rel_gap: finite(r.rel_gap(opts.gap_theta)),
        solution: r.incumbent.as_ref().map(|x| p.to_input_order(x)),
        nodes: r.node_count,
        subproblems: r.subproblem_count,
        iterations: r.iteration_count,
        time_seconds: secs,
        message: r.message.clone(),
        options_echo: echo,
    }
}

fn exit_code(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::Optimal | SolveStatus::Infeasible | SolveStatus::Unbounded => EXIT_DECIDED,
        SolveStatus::IterationLimit | SolveStatus::TimeLimit => EXIT_LIMIT,
        SolveStatus::Error => EXIT_ERROR,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.6e}"))
}

/// Returns the exit code; `Err` is a usage, file or parse problem.
fn run_solve(a: &SolveArgs) -> anyhow::Result<u8> {
    let t0 = Instant::now();
    let opts = a.options();
    opts.validate().map_err(anyhow::Error::msg)?;
    let text = std::fs::read_to_string(&a.file).with_context(|| format!("cannot read {}", a.file.display()))?;
    let parsed = parse_cbf(&text).with_context(|| format!("cannot parse {}", a.file.display()))?;
    log::info!(
        "{}: {} variables ({} integer), {} rows, {} cones",
        a.file.display(),
        parsed.num_vars(),
        parsed.int_count,
        parsed.num_rows(),
        parsed.cones.len()
    );
    let (p, r) = match preprocess(&parsed, a.default_big_m) {
        Ok(p) => {
            let r = solve(&p, &opts);
            (p, r)
        }
        Err(e @ ModelError::InfeasibleBounds { .. }) => {
            log::info!("{e}");
            let mut r = SolveResult::new(SolveStatus::Infeasible);
            r.message = Some(e.to_string());
            (parsed, r)
        }
        Err(e) => return Err(e).context("preprocessing failed"),
    };
    let echo = OptionsEcho {
        file: a.file.display().to_string(),
        seed: a.seed,
        default_big_m: a.default_big_m,
        oa: opts.clone(),
    };
    let rep = report(&p, &r, &opts, echo, t0.elapsed().as_secs_f64());
    eprintln!(
        "status {} objective {} bound {} gap {} nodes {} subproblems {} time {:.3}s",
        rep.status,
        fmt_opt(rep.original_objective),
        fmt_opt(rep.bound.map(|v| p.original_objective(v))),
        fmt_opt(rep.rel_gap),
        rep.nodes,
        rep.subproblems,
        rep.time_seconds
    );
    if let Some(m) = &rep.message {
        eprintln!("message: {m}");
    }
    let json = serde_json::to_string_pretty(&rep)?;
    match &a.out {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(exit_code(r.status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let Command::Solve(args) = &cli.command;
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run_solve(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
