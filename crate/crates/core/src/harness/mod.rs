//! Experiment orchestration: problem and network setup, the metric-tracing
//! run loop, step-size grid search and CSV output.

mod config;
mod trace;

pub use config::{
    parse_entries, parse_override, ExperimentConfig, GraphConfig, GraphSpec, PenaltyChoice,
    ProblemSpec, SolverSettings, CONFIG_KEYS,
};
pub use trace::{emit_csv, format_float, read_csv, write_csv, TraceRecord, CSV_HEADER};

use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matops::{gram_residual, polar_orthonormalize, procrustes_distance, DenseMatrix};
use crate::network::{build_topology, MixingPair, Topology};
use crate::problems::{
    generate_lrmc, generate_synthetic_pca, load_mnist_pca, GlobalGradient, Problem,
};
use crate::solvers::{self, average, average_iterate, consensus_error, SolverConfig, StackedState};
use crate::surrogate::{riemannian_gradient, surrogate_h, SurrogateParams};
use crate::theory::{estimate_constants, RegionSampler};

/// Sampled pairs used when the penalty weight is derived automatically.
pub const AUTO_BETA_PAIRS: usize = 200;

/// Step grid `{1,2,4,6,8} × {1e−5,1e−4,1e−3,1e−2}` for synthetic PCA.
pub fn pca_grid() -> Vec<f64> {
    product(&[1.0, 2.0, 4.0, 6.0, 8.0], &[1e-5, 1e-4, 1e-3, 1e-2])
}

/// Step grid `{1.25,2.5,6.25,10} × {1e−5,1e−4,1e−3}` for matrix completion.
pub fn lrmc_grid() -> Vec<f64> {
    product(&[1.25, 2.5, 6.25, 10.0], &[1e-5, 1e-4, 1e-3])
}

fn product(mantissas: &[f64], exponents: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = exponents
        .iter()
        .flat_map(|e| mantissas.iter().map(move |m| m * e))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// A built problem and network, reusable across runs.
pub struct Prepared {
    pub problem: Box<dyn Problem>,
    pub topology: Topology,
    pub mixing: MixingPair,
    constants_seed: u64,
    beta_floor: OnceLock<f64>,
}

impl Prepared {
    pub fn new(problem: Box<dyn Problem>, topology: Topology, theta: f64, constants_seed: u64) -> Result<Self> {
        if topology.n() != problem.agents() {
            return Err(Error::Config(format!(
                "graph has {} nodes but the problem has {} agents",
                topology.n(),
                problem.agents()
            )));
        }
        let mixing = MixingPair::metropolis(&topology, theta)?;
        Ok(Prepared {
            problem,
            topology,
            mixing,
            constants_seed,
            beta_floor: OnceLock::new(),
        })
    }

    /// `beta_floor` from sampled constants, computed once.
    pub fn beta_floor(&self) -> Result<f64> {
        if let Some(v) = self.beta_floor.get() {
            return Ok(*v);
        }
        let (d, r) = self.problem.dims();
        let sampler = RegionSampler::new(d, r, self.constants_seed);
        let consts = estimate_constants(self.problem.as_ref(), &sampler, AUTO_BETA_PAIRS)?;
        Ok(*self.beta_floor.get_or_init(|| consts.beta_floor))
    }

    /// `(α, β)` for the given settings: `α = β̂·step_scale`, `β` fixed or
    /// `min(beta_floor, 1/(4α))`.
    pub fn resolve_steps(&self, settings: &SolverSettings) -> Result<(f64, f64)> {
        let alpha = settings.beta_hat * self.problem.step_scale();
        let beta = match settings.beta {
            PenaltyChoice::Fixed(b) => b,
            PenaltyChoice::Auto => self.beta_floor()?.min(0.25 / alpha),
        };
        Ok((alpha, beta))
    }

    /// Communication proxy: scalars sent after `comm_rounds` exchanges.
    pub fn scalars_communicated(&self, comm_rounds: usize) -> usize {
        let (d, r) = self.problem.dims();
        comm_rounds * self.mixing.total_degree() * d * r
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<Box<dyn Problem>> {
    Ok(match spec {
        ProblemSpec::PcaSynthetic(p) => Box::new(generate_synthetic_pca(p)?),
        ProblemSpec::PcaMnist { path, n, r, seed } => Box::new(load_mnist_pca(path, *n, *r, *seed)?),
        ProblemSpec::Lrmc(p) => Box::new(generate_lrmc(p)?),
    })
}

pub fn build_graph(cfg: &GraphConfig, n: usize) -> Result<Topology> {
    match &cfg.spec {
        GraphSpec::Generated(kind) => build_topology(*kind, n, cfg.seed),
        GraphSpec::File(path) => Topology::read_edge_list(path),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let problem = build_problem(&cfg.problem)?;
    let topology = build_graph(&cfg.graph, problem.agents())?;
    Prepared::new(problem, topology, cfg.graph.theta, cfg.problem.seed())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Stationarity dropped below `tol`.
    Tolerance,
    /// `max_iters` iterations completed.
    Budget,
    Diverged { iter: usize, reason: String },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::Budget => "budget",
            Termination::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<TraceRecord>,
    pub termination: Termination,
    /// Iterations completed.
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Largest `‖𝐗 − 𝐗̄‖_F + ‖𝐬 − 𝐬̄‖_F` along the run.
    pub joint_error_max: f64,
    /// `Σₖ ‖𝐗ₖ − 𝐗̄ₖ‖²_F`.
    pub consensus_sq_sum: f64,
    /// Final state, absent after divergence.
    pub final_state: Option<StackedState>,
}

impl RunOutcome {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }

    pub fn reached_tol(&self) -> bool {
        self.termination == Termination::Tolerance
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let prepared = prepare(cfg)?;
    run_prepared(&prepared, &cfg.solver, cfg.trace_every)
}

pub fn run_prepared(prepared: &Prepared, settings: &SolverSettings, trace_every: usize) -> Result<RunOutcome> {
    run_observed(prepared, settings, trace_every, |_| {})
}

/// The run loop. `observe` sees the state after initialization and after
/// every completed step.
pub fn run_observed(
    prepared: &Prepared,
    settings: &SolverSettings,
    trace_every: usize,
    mut observe: impl FnMut(&StackedState),
) -> Result<RunOutcome> {
    if trace_every == 0 {
        return Err(Error::Parameter("trace_every must be at least 1".into()));
    }
    let (alpha, beta) = prepared.resolve_steps(settings)?;
    let cfg = SolverConfig {
        alpha,
        beta,
        max_iters: settings.max_iters,
        tol: settings.tol,
    };
    let problem = prepared.problem.as_ref();
    let mp = &prepared.mixing;
    let (d, r) = problem.dims();
    let x0 = solvers::default_initial_point(d, r, settings.init_seed);
    let start = Instant::now();
    let mut state = solvers::init(settings.kind, problem, mp, &cfg, vec![x0; problem.agents()])?;
    observe(&state);

    let mut trace = Vec::new();
    let mut joint_error_max = 0.0f64;
    let mut consensus_sq_sum = 0.0;
    let termination = loop {
        let traced = state.iter % trace_every == 0;
        let consensus = consensus_error(&state.x);
        consensus_sq_sum += consensus * consensus;
        let dual_spread = if state.s.is_empty() { 0.0 } else { consensus_error(&state.s) };
        joint_error_max = joint_error_max.max(consensus + dual_spread);

        let at_budget = state.iter >= settings.max_iters;
        let need_stationarity = traced || at_budget || settings.tol > 0.0;
        let mut stationarity = f64::NAN;
        let mut polar = None;
        if need_stationarity {
            match polar_orthonormalize(&average_iterate(&state)) {
                Ok(p) => {
                    stationarity = riemannian_gradient(&GlobalGradient(problem), &p)?.norm();
                    polar = Some(p);
                }
                Err(e) => {
                    break Termination::Diverged {
                        iter: state.iter,
                        reason: format!("averaged iterate lost rank: {e}"),
                    }
                }
            }
        }
        let done = if stationarity < settings.tol {
            Some(Termination::Tolerance)
        } else if at_budget {
            Some(Termination::Budget)
        } else {
            None
        };
        if traced || done.is_some() {
            let polar = polar.expect("computed whenever traced or finishing");
            trace.push(record(problem, &state, &polar, stationarity, consensus, beta, &start)?);
        }
        if let Some(t) = done {
            break t;
        }
        match solvers::step(settings.kind, &mut state, problem, mp, &cfg) {
            Ok(()) => observe(&state),
            Err(Error::Divergence { iter, reason }) => break Termination::Diverged { iter, reason },
            Err(e) => return Err(e),
        }
    };
    let diverged = matches!(termination, Termination::Diverged { .. });
    Ok(RunOutcome {
        trace,
        iterations: state.iter,
        termination,
        alpha,
        beta,
        joint_error_max,
        consensus_sq_sum,
        final_state: (!diverged).then_some(state),
    })
}

fn record(
    problem: &dyn Problem,
    state: &StackedState,
    polar: &DenseMatrix,
    stationarity: f64,
    consensus: f64,
    beta: f64,
    start: &Instant,
) -> Result<TraceRecord> {
    let x_bar = average(&state.x);
    let dist_solution = match problem.reference() {
        Some(x_star) => Some(procrustes_distance(polar, x_star)?),
        None => None,
    };
    let surrogate = surrogate_h(&GlobalGradient(problem), &x_bar, SurrogateParams { beta });
    Ok(TraceRecord {
        iter: state.iter,
        comm_rounds: state.comm_rounds,
        gradient_evals: state.gradient_evals,
        stationarity,
        consensus,
        feasibility: gram_residual(&x_bar).norm(),
        dist_solution,
        fval: problem.global_value(polar),
        surrogate_norm: surrogate.norm(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub beta_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    pub termination: Termination,
    pub iterations: usize,
    /// Stationarity at the last recorded iterate (NaN after early divergence).
    pub final_stationarity: f64,
}

impl GridPoint {
    fn class(&self) -> u8 {
        match self.termination {
            Termination::Tolerance => 0,
            Termination::Budget => 1,
            Termination::Diverged { .. } => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// One summary per grid value, in input order.
    pub points: Vec<GridPoint>,
    /// Index of the winner; `None` when every point diverged.
    pub best: Option<usize>,
}

impl GridOutcome {
    pub fn winner(&self) -> Option<&GridPoint> {
        self.best.map(|i| &self.points[i])
    }
}

/// Indices of `points` from best to worst: tol-reaching points by iterations,
/// then final stationarity, then `β̂`; then budget-exhausted points by final
/// stationarity, then `β̂`; diverged points last by `β̂`.
pub fn rank_points(points: &[GridPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.class()
            .cmp(&pb.class())
            .then_with(|| {
                if pa.class() == 0 {
                    pa.iterations.cmp(&pb.iterations)
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then_with(|| {
                if pa.class() < 2 {
                    pa.final_stationarity.total_cmp(&pb.final_stationarity)
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then_with(|| pa.beta_hat.total_cmp(&pb.beta_hat))
    });
    order
}

pub fn grid_search(template: &ExperimentConfig, grid: &[f64]) -> Result<GridOutcome> {
    let prepared = prepare(template)?;
    grid_search_prepared(&prepared, &template.solver, grid)
}

/// Runs every grid value independently (in parallel) with the template's
/// other settings.
pub fn grid_search_prepared(prepared: &Prepared, template: &SolverSettings, grid: &[f64]) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::Parameter("step grid is empty".into()));
    }
    if matches!(template.beta, PenaltyChoice::Auto) {
        prepared.beta_floor()?;
    }
    let points = grid
        .par_iter()
        .map(|&beta_hat| {
            let settings = SolverSettings {
                beta_hat,
                ..template.clone()
            };
            let out = run_prepared(prepared, &settings, usize::MAX)?;
            Ok(GridPoint {
                beta_hat,
                alpha: out.alpha,
                beta: out.beta,
                iterations: out.iterations,
                final_stationarity: out.last().map_or(f64::NAN, |r| r.stationarity),
                termination: out.termination,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rank_points(&points)
        .first()
        .copied()
        .filter(|&i| points[i].class() < 2);
    Ok(GridOutcome { points, best })
}
