//! Synchronous iteration engines over a simulated network.
//!
//! Every solver performs one neighbor exchange of the primal blocks and one
//! local-gradient evaluation per agent per iteration. Updates read only the
//! iteration-`k` state and write fresh buffers, so evaluating agents in order
//! is equivalent to running them in parallel.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matops::{polar_orthonormalize, qr_orthonormalize, DenseMatrix};
use crate::network::MixingPair;
use crate::problems::{AgentGradient, Problem};
use crate::surrogate::{surrogate_h, tangent_projection, SurrogateParams};

/// Any block whose Frobenius norm exceeds this aborts the run.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Retraction-free EXTRA.
    RfExtra,
    /// Decentralized projected Riemannian gradient descent (baseline analogue).
    Dprgd,
    /// EXTRA with Riemannian gradients and a polar retraction (baseline analogue).
    RextraStyle,
}

impl SolverKind {
    pub fn uses_penalty(self) -> bool {
        matches!(self, SolverKind::RfExtra)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::RfExtra => "rf_extra",
            SolverKind::Dprgd => "dprgd",
            SolverKind::RextraStyle => "rextra_style",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf_extra" => Ok(SolverKind::RfExtra),
            "dprgd" => Ok(SolverKind::Dprgd),
            "rextra_style" => Ok(SolverKind::RextraStyle),
            other => Err(Error::Config(format!(
                "unknown solver {other:?} (expected rf_extra, dprgd or rextra_style)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    /// Penalty weight; ignored by the retraction-based solvers.
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl SolverConfig {
    pub fn validate(&self, kind: SolverKind) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if kind.uses_penalty() && !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Parameter(format!("tol must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }

    fn surrogate(&self) -> SurrogateParams {
        SurrogateParams { beta: self.beta }
    }
}

/// Joint state of all agents after `iter` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    pub x: Vec<DenseMatrix>,
    /// Auxiliary (correction) blocks; empty for solvers without one.
    pub s: Vec<DenseMatrix>,
    /// Local direction evaluated at the current `x` (`Hᵢ` for RF-EXTRA, the
    /// Riemannian gradient for the retraction-based EXTRA analogue).
    pub h_cache: Vec<DenseMatrix>,
    pub iter: usize,
    pub comm_rounds: usize,
    /// Local-gradient evaluations performed by steps (initialization excluded).
    pub gradient_evals: usize,
}

impl StackedState {
    pub fn agents(&self) -> usize {
        self.x.len()
    }
}

/// Seeded Gaussian `d × r` matrix, QR-orthonormalized.
pub fn default_initial_point(d: usize, r: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..d * r).map(|_| rng.sample(StandardNormal)).collect();
    qr_orthonormalize(&DenseMatrix::from_row_slice(d, r, &draws))
}

/// `x̄ = (1/n) Σᵢ Xᵢ`.
pub fn average_iterate(state: &StackedState) -> DenseMatrix {
    average(&state.x)
}

pub(crate) fn average(blocks: &[DenseMatrix]) -> DenseMatrix {
    let mut acc = DenseMatrix::zeros(blocks[0].nrows(), blocks[0].ncols());
    for b in blocks {
        acc += b;
    }
    acc / blocks.len() as f64
}

/// `‖𝐗 − 𝐗̄‖_F`.
pub fn consensus_error(blocks: &[DenseMatrix]) -> f64 {
    let mean = average(blocks);
    blocks
        .iter()
        .map(|b| (b - &mean).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `Σⱼ m_ij Xⱼ` over the support of row `i` (self plus neighbors).
fn mix_row(m: &DenseMatrix, mp: &MixingPair, i: usize, x: &[DenseMatrix]) -> DenseMatrix {
    let mut acc = &x[i] * m[(i, i)];
    for &j in mp.neighbors(i) {
        acc += &x[j] * m[(i, j)];
    }
    acc
}

fn check_shapes<P: Problem + ?Sized>(problem: &P, mp: &MixingPair, x0: &[DenseMatrix]) -> Result<()> {
    let n = problem.agents();
    if mp.n() != n || x0.len() != n {
        return Err(Error::Parameter(format!(
            "problem has {n} agents, mixing matrix {}, initial blocks {}",
            mp.n(),
            x0.len()
        )));
    }
    let dims = problem.dims();
    if let Some(bad) = x0.iter().find(|b| b.shape() != dims) {
        return Err(Error::Parameter(format!(
            "initial block is {:?}, problem expects {dims:?}",
            bad.shape()
        )));
    }
    Ok(())
}

fn guard(blocks: &[DenseMatrix], iter: usize) -> Result<()> {
    for (i, b) in blocks.iter().enumerate() {
        let norm = b.norm();
        if !norm.is_finite() {
            return Err(Error::Divergence {
                iter,
                reason: format!("non-finite entries in block {i}"),
            });
        }
        if norm > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                iter,
                reason: format!("block {i} has norm {norm:e}"),
            });
        }
    }
    Ok(())
}

fn riemannian_direction<P: Problem + ?Sized>(problem: &P, agent: usize, x: &DenseMatrix) -> DenseMatrix {
    tangent_projection(x, &problem.local_gradient(agent, x))
}

/// Initial state for any solver. RF-EXTRA sets `sᵢ = −α Hᵢ(Xᵢ,₀)`; the
/// retraction-based EXTRA analogue does the same with the Riemannian gradient
/// at the polar factor of each block.
pub fn init<P: Problem + ?Sized>(
    kind: SolverKind,
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
    x0: Vec<DenseMatrix>,
) -> Result<StackedState> {
    check_shapes(problem, mp, &x0)?;
    cfg.validate(kind)?;
    let n = x0.len();
    let (x, h_cache) = match kind {
        SolverKind::RfExtra => {
            let h = (0..n)
                .map(|i| surrogate_h(&AgentGradient { problem, agent: i }, &x0[i], cfg.surrogate()))
                .collect();
            (x0, h)
        }
        SolverKind::RextraStyle => {
            let x = x0
                .iter()
                .map(polar_orthonormalize)
                .collect::<Result<Vec<_>>>()?;
            let h = (0..n).map(|i| riemannian_direction(problem, i, &x[i])).collect();
            (x, h)
        }
        SolverKind::Dprgd => {
            let x = x0
                .iter()
                .map(polar_orthonormalize)
                .collect::<Result<Vec<_>>>()?;
            (x, Vec::new())
        }
    };
    let s = h_cache.iter().map(|h| h * -cfg.alpha).collect();
    guard(&x, 0)?;
    Ok(StackedState {
        x,
        s,
        h_cache,
        iter: 0,
        comm_rounds: 0,
        gradient_evals: 0,
    })
}

/// RF-EXTRA initialization.
pub fn rf_extra_init<P: Problem + ?Sized>(
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
    x0: Vec<DenseMatrix>,
) -> Result<StackedState> {
    init(SolverKind::RfExtra, problem, mp, cfg, x0)
}

/// One synchronous round of the selected solver.
pub fn step<P: Problem + ?Sized>(
    kind: SolverKind,
    state: &mut StackedState,
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
) -> Result<()> {
    match kind {
        SolverKind::RfExtra => rf_extra_step(state, problem, mp, cfg),
        SolverKind::Dprgd => dprgd_step(state, problem, mp, cfg),
        SolverKind::RextraStyle => rextra_style_step(state, problem, mp, cfg),
    }
}

/// `Xᵢ ← Σⱼ wᵢⱼXⱼ + sᵢ`,
/// `sᵢ ← sᵢ + Σⱼ(wᵢⱼ − vᵢⱼ)Xⱼ − α(Hᵢ(Xᵢ⁺) − Hᵢ(Xᵢ))`.
pub fn rf_extra_step<P: Problem + ?Sized>(
    state: &mut StackedState,
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
) -> Result<()> {
    let n = state.agents();
    let correction = &mp.w - &mp.v;
    let params = cfg.surrogate();
    let mut x_next = Vec::with_capacity(n);
    let mut s_next = Vec::with_capacity(n);
    let mut h_next = Vec::with_capacity(n);
    for i in 0..n {
        let xi = mix_row(&mp.w, mp, i, &state.x) + &state.s[i];
        let hi = surrogate_h(&AgentGradient { problem, agent: i }, &xi, params);
        let mut si = mix_row(&correction, mp, i, &state.x) + &state.s[i];
        si -= (&hi - &state.h_cache[i]) * cfg.alpha;
        x_next.push(xi);
        s_next.push(si);
        h_next.push(hi);
    }
    let iter = state.iter + 1;
    guard(&x_next, iter)?;
    guard(&s_next, iter)?;
    state.x = x_next;
    state.s = s_next;
    state.h_cache = h_next;
    state.iter = iter;
    state.comm_rounds += 1;
    state.gradient_evals += n;
    Ok(())
}

/// `Xᵢ ← polar(Σⱼ wᵢⱼXⱼ − α grad fᵢ(Xᵢ))`.
pub fn dprgd_step<P: Problem + ?Sized>(
    state: &mut StackedState,
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
) -> Result<()> {
    let n = state.agents();
    let iter = state.iter + 1;
    let mut x_next = Vec::with_capacity(n);
    for i in 0..n {
        let mut y = mix_row(&mp.w, mp, i, &state.x);
        y -= riemannian_direction(problem, i, &state.x[i]) * cfg.alpha;
        guard(std::slice::from_ref(&y), iter)?;
        x_next.push(retract(&y, iter)?);
    }
    state.x = x_next;
    state.iter = iter;
    state.comm_rounds += 1;
    state.gradient_evals += n;
    Ok(())
}

/// RF-EXTRA's two-state recursion with `Hᵢ` replaced by the Riemannian
/// gradient and the primal update retracted by the polar factor.
pub fn rextra_style_step<P: Problem + ?Sized>(
    state: &mut StackedState,
    problem: &P,
    mp: &MixingPair,
    cfg: &SolverConfig,
) -> Result<()> {
    let n = state.agents();
    let iter = state.iter + 1;
    let correction = &mp.w - &mp.v;
    let mut x_next = Vec::with_capacity(n);
    let mut s_next = Vec::with_capacity(n);
    let mut h_next = Vec::with_capacity(n);
    for i in 0..n {
        let y = mix_row(&mp.w, mp, i, &state.x) + &state.s[i];
        guard(std::slice::from_ref(&y), iter)?;
        let xi = retract(&y, iter)?;
        let hi = riemannian_direction(problem, i, &xi);
        let mut si = mix_row(&correction, mp, i, &state.x) + &state.s[i];
        si -= (&hi - &state.h_cache[i]) * cfg.alpha;
        x_next.push(xi);
        s_next.push(si);
        h_next.push(hi);
    }
    guard(&s_next, iter)?;
    state.x = x_next;
    state.s = s_next;
    state.h_cache = h_next;
    state.iter = iter;
    state.comm_rounds += 1;
    state.gradient_evals += n;
    Ok(())
}

fn retract(y: &DenseMatrix, iter: usize) -> Result<DenseMatrix> {
    polar_orthonormalize(y).map_err(|e| Error::Divergence {
        iter,
        reason: format!("retraction failed: {e}"),
    })
}
