//! `rfextra` command-line front end: single runs, step-size sweeps, theory
//! checks and data generation.
//!
//! Exit codes: 0 on success, 1 on divergence, failed checks or a sweep with no
//! winner, 2 on usage or config errors.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfextra::harness::{
    self, format_float, lrmc_grid, parse_entries, parse_override, pca_grid, rank_points,
    write_csv, GridOutcome, ProblemSpec, Termination,
};
use rfextra::problems::{generate_lrmc, synthetic_data_matrix};
use rfextra::theory::{self, SuiteOptions, CHECK_NAMES};
use rfextra::{build_topology, Error, ExperimentConfig, TopologyKind};

#[derive(Parser)]
#[command(name = "rfextra", version, about = "Retraction-free decentralized optimization on the Stiefel manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace as CSV.
    Run(ExperimentArgs),
    /// Sweep the step-size grid and report the best point.
    Grid {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// `pca`, `lrmc`, or a comma-separated list of β̂ values.
        /// Defaults to the grid of the configured problem family.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Numerical checks of the convergence theory, one line per check.
    Theory(TheoryArgs),
    /// Write graphs, synthetic data or a default config.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct ExperimentArgs {
    /// `section.key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem family: pca_synthetic, pca_mnist or lrmc.
    #[arg(long)]
    problem: Option<String>,
    /// Solver: rf_extra, dprgd or rextra_style.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    beta_hat: Option<f64>,
    /// Penalty weight, or `auto`.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Edge-list file (first line `n`, then `i j` per edge).
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// IDX image file; selects the pca_mnist problem.
    #[arg(long)]
    mnist: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    trace_every: Option<usize>,
    /// Any config key as `section.key=value`; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("which").required(true).args(["all", "check"])))]
struct TheoryArgs {
    /// Run every check.
    #[arg(long)]
    all: bool,
    /// Run only the named check; repeatable.
    #[arg(long)]
    check: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    /// Iteration budget of the rate fits.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Edge list of a standard topology.
    Graph {
        #[arg(long, value_enum)]
        kind: GraphKind,
        #[arg(long)]
        n: usize,
        /// Edge probability for erdos-renyi.
        #[arg(long, default_value_t = 0.6)]
        p: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stacked synthetic PCA data matrix, one row per sample.
    Pca {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Observed matrix-completion entries as `row,col,value`.
    Lrmc {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Default config for a problem family, with every applicable key.
    Config {
        #[arg(long, default_value = "pca_synthetic")]
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Ring,
    Star,
    Complete,
    ErdosRenyi,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parameter(_) | Error::Format(_) | Error::Io { .. } | Error::Csv { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(exp) => cmd_run(&exp),
        Command::Grid { exp, grid } => cmd_grid(&exp, grid.as_deref()),
        Command::Theory(args) => cmd_theory(&args),
        Command::Gen(g) => cmd_gen(g),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// File entries first, then dedicated flags, then `--set` pairs; the last
/// occurrence of a key wins.
fn load_config(exp: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut entries = match &exp.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
            parse_entries(&text).map_err(|e| fail(2, format!("{}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    let mut push = |k: &str, v: String| entries.push((k.to_owned(), v));
    if let Some(v) = &exp.problem {
        push("problem.kind", v.clone());
    }
    if let Some(path) = &exp.mnist {
        push("problem.kind", "pca_mnist".into());
        push("problem.path", path.display().to_string());
    }
    if let Some(v) = &exp.solver {
        push("solver.kind", v.clone());
    }
    if let Some(v) = exp.beta_hat {
        push("solver.beta_hat", v.to_string());
    }
    if let Some(v) = &exp.beta {
        push("solver.beta", v.clone());
    }
    if let Some(v) = exp.max_iters {
        push("solver.max_iters", v.to_string());
    }
    if let Some(v) = exp.tol {
        push("solver.tol", v.to_string());
    }
    if let Some(path) = &exp.graph_file {
        push("graph.kind", "file".into());
        push("graph.path", path.display().to_string());
    }
    if let Some(path) = &exp.csv {
        push("output.csv", path.display().to_string());
    }
    if let Some(v) = exp.trace_every {
        push("output.trace_every", v.to_string());
    }
    for s in &exp.sets {
        entries.push(parse_override(s)?);
    }
    Ok(ExperimentConfig::from_entries(&entries)?)
}

fn cmd_run(exp: &ExperimentArgs) -> Result<u8, Failure> {
    let cfg = load_config(exp)?;
    let out = harness::run_experiment(&cfg)?;
    write_trace(&out.trace, cfg.csv.as_deref())?;
    let last = out.last();
    eprintln!(
        "termination={} iterations={} alpha={:e} beta={:e} stationarity={:e} feasibility={:e}",
        out.termination.label(),
        out.iterations,
        out.alpha,
        out.beta,
        last.map_or(f64::NAN, |r| r.stationarity),
        last.map_or(f64::NAN, |r| r.feasibility),
    );
    match out.termination {
        Termination::Diverged { iter, reason } => Err(fail(1, format!("diverged at iteration {iter}: {reason}"))),
        _ => Ok(0),
    }
}

fn write_trace(trace: &[harness::TraceRecord], path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(path) => Ok(harness::emit_csv(trace, path)?),
        None => write_csv(trace, std::io::stdout().lock()).or_else(stdout_closed),
    }
}

fn parse_grid(spec: Option<&str>, problem: &ProblemSpec) -> Result<Vec<f64>, Failure> {
    let values = match spec {
        None if matches!(problem, ProblemSpec::Lrmc(_)) => lrmc_grid(),
        None | Some("pca") => pca_grid(),
        Some("lrmc") => lrmc_grid(),
        Some(list) => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| *x > 0.0 && x.is_finite())
                    .ok_or_else(|| fail(2, format!("--grid: bad step value {v:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    if values.is_empty() {
        return Err(fail(2, "--grid: empty grid"));
    }
    Ok(values)
}

fn cmd_grid(exp: &ExperimentArgs, grid: Option<&str>) -> Result<u8, Failure> {
    let cfg = load_config(exp)?;
    let values = parse_grid(grid, &cfg.problem)?;
    let prepared = harness::prepare(&cfg)?;
    let outcome = harness::grid_search_prepared(&prepared, &cfg.solver, &values)?;
    print_grid(&outcome);
    let Some(best) = outcome.winner() else {
        return Err(fail(1, "every grid point diverged; no winner"));
    };
    if let Some(path) = &cfg.csv {
        let mut settings = cfg.solver.clone();
        settings.beta_hat = best.beta_hat;
        let out = harness::run_prepared(&prepared, &settings, cfg.trace_every)?;
        harness::emit_csv(&out.trace, path)?;
    }
    Ok(0)
}

fn print_grid(outcome: &GridOutcome) {
    let mut stdout = std::io::stdout().lock();
    for i in rank_points(&outcome.points) {
        let p = &outcome.points[i];
        let _ = writeln!(
            stdout,
            "POINT beta_hat={:e} alpha={:e} beta={:e} termination={} iterations={} stationarity={}",
            p.beta_hat,
            p.alpha,
            p.beta,
            p.termination.label(),
            p.iterations,
            format_float(p.final_stationarity),
        );
    }
    match outcome.winner() {
        Some(p) => {
            let _ = writeln!(stdout, "WINNER beta_hat={:e} termination={}", p.beta_hat, p.termination.label());
        }
        None => {
            let _ = writeln!(stdout, "WINNER none");
        }
    }
}

fn cmd_theory(args: &TheoryArgs) -> Result<u8, Failure> {
    let defaults = SuiteOptions::default();
    let opts = SuiteOptions {
        samples: args.samples.unwrap_or(defaults.samples),
        pairs: args.pairs.unwrap_or(defaults.pairs),
        rate_budget: args.budget.unwrap_or(defaults.rate_budget),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let names: Vec<&str> = if args.all {
        CHECK_NAMES.to_vec()
    } else {
        for name in &args.check {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(fail(2, format!("unknown check {name:?} (known: {})", CHECK_NAMES.join(", "))));
            }
        }
        args.check.iter().map(String::as_str).collect()
    };
    let mut all_pass = true;
    for name in names {
        let line = theory::run_check(name, &opts)?;
        all_pass &= line.pass;
        println!("{line}");
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_gen(cmd: GenCommand) -> Result<u8, Failure> {
    match cmd {
        GenCommand::Graph { kind, n, p, seed, out } => {
            let kind = match kind {
                GraphKind::Ring => TopologyKind::Ring,
                GraphKind::Star => TopologyKind::Star,
                GraphKind::Complete => TopologyKind::Complete,
                GraphKind::ErdosRenyi => TopologyKind::ErdosRenyi { p },
            };
            emit(out.as_deref(), &build_topology(kind, n, seed)?.to_edge_list())
        }
        GenCommand::Pca { exp, out } => {
            let cfg = load_config(&exp)?;
            let ProblemSpec::PcaSynthetic(params) = &cfg.problem else {
                return Err(fail(2, format!("gen pca needs problem.kind = pca_synthetic, got {}", cfg.problem.kind_name())));
            };
            let a = synthetic_data_matrix(params)?;
            let mut text = String::new();
            for row in a.row_iter() {
                let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            emit(out.as_deref(), &text)
        }
        GenCommand::Lrmc { mut exp, out } => {
            if exp.problem.is_none() && exp.config.is_none() {
                exp.problem = Some("lrmc".into());
            }
            let cfg = load_config(&exp)?;
            let ProblemSpec::Lrmc(params) = &cfg.problem else {
                return Err(fail(2, format!("gen lrmc needs problem.kind = lrmc, got {}", cfg.problem.kind_name())));
            };
            let problem = generate_lrmc(params)?;
            let a = problem.target();
            let mut text = String::from("row,col,value\n");
            for col in 0..a.ncols() {
                for row in 0..a.nrows() {
                    if problem.is_observed(row, col) {
                        text.push_str(&format!("{row},{col},{}\n", format_float(a[(row, col)])));
                    }
                }
            }
            emit(out.as_deref(), &text)
        }
        GenCommand::Config { problem, out } => {
            emit(out.as_deref(), &ExperimentConfig::defaults_for(&problem)?.to_text())
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<u8, Failure> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| fail(2, format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .or_else(stdout_closed)?,
    }
    Ok(0)
}

/// A reader that stops early (`| head`) is not an error.
fn stdout_closed(e: std::io::Error) -> Result<(), Failure> {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        Ok(())
    } else {
        Err(fail(1, format!("stdout: {e}")))
    }
}
