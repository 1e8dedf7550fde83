//! Fixtures shared by the iteration benchmarks.

use rfextra::harness::{prepare, PenaltyChoice, Prepared};
use rfextra::solvers::{default_initial_point, init};
use rfextra::{DenseMatrix, ExperimentConfig, Result, SolverConfig, SolverKind, StackedState};

/// A built instance with fixed steps and a replicated starting point.
pub struct Fixture {
    pub prepared: Prepared,
    pub cfg: SolverConfig,
    pub x0: DenseMatrix,
}

impl Fixture {
    fn from_config(mut exp: ExperimentConfig, beta: PenaltyChoice) -> Result<Self> {
        exp.solver.beta = beta;
        let prepared = prepare(&exp)?;
        let (alpha, beta) = prepared.resolve_steps(&exp.solver)?;
        let (d, r) = prepared.problem.dims();
        Ok(Fixture {
            cfg: SolverConfig {
                alpha,
                beta,
                max_iters: exp.solver.max_iters,
                tol: exp.solver.tol,
            },
            x0: default_initial_point(d, r, exp.solver.init_seed),
            prepared,
        })
    }

    /// Default synthetic PCA (n = 8, 1000 × 10 per agent, r = 5).
    pub fn pca() -> Result<Self> {
        Self::from_config(ExperimentConfig::defaults_for("pca_synthetic")?, PenaltyChoice::Auto)
    }

    /// Default matrix completion (n = 8, d = 100, T = 1000, r = 5) at the
    /// smallest grid step with `β = 0.1`, where iterates stay bounded.
    pub fn lrmc() -> Result<Self> {
        Self::from_config(ExperimentConfig::defaults_for("lrmc")?, PenaltyChoice::Fixed(0.1))
    }

    pub fn agents(&self) -> usize {
        self.prepared.problem.agents()
    }

    /// Solver state right after initialization.
    pub fn initial_state(&self, kind: SolverKind) -> Result<StackedState> {
        let x0 = vec![self.x0.clone(); self.agents()];
        init(kind, self.prepared.problem.as_ref(), &self.prepared.mixing, &self.cfg, x0)
    }
}
