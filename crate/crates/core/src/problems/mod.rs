//! Benchmark problem families.

mod lrmc;
mod mnist;
mod pca;

pub use lrmc::{generate_lrmc, sampling_rate, LrmcParams, LrmcProblem, DEFAULT_RIDGE};
pub use mnist::{load_mnist_pca, partition_rows, IdxImages, IDX_IMAGE_MAGIC};
pub use pca::{
    generate_synthetic_pca, synthetic_data_matrix, DataScale, PcaProblem, SyntheticPcaParams,
};

use crate::matops::DenseMatrix;
use crate::surrogate::LocalGradient;

/// A decentralized objective `f = (1/n) Σᵢ fᵢ` over `d × r` matrices.
pub trait Problem: Send + Sync {
    fn agents(&self) -> usize;

    /// `(d, r)`.
    fn dims(&self) -> (usize, usize);

    fn local_value(&self, agent: usize, x: &DenseMatrix) -> f64;

    fn local_gradient(&self, agent: usize, x: &DenseMatrix) -> DenseMatrix;

    /// Factor turning a raw grid value `β̂` into the step size `α = β̂·scale`.
    fn step_scale(&self) -> f64;

    fn reference(&self) -> Option<&DenseMatrix> {
        None
    }

    fn global_value(&self, x: &DenseMatrix) -> f64 {
        let n = self.agents();
        (0..n).map(|i| self.local_value(i, x)).sum::<f64>() / n as f64
    }

    fn global_gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        let n = self.agents();
        let (d, r) = self.dims();
        let mut acc = DenseMatrix::zeros(d, r);
        for i in 0..n {
            acc += self.local_gradient(i, x);
        }
        acc / n as f64
    }
}

/// Borrowed view of one agent's gradient, usable wherever a
/// [`LocalGradient`] is expected.
pub struct AgentGradient<'a, P: ?Sized> {
    pub problem: &'a P,
    pub agent: usize,
}

impl<P: Problem + ?Sized> LocalGradient for AgentGradient<'_, P> {
    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self.problem.local_gradient(self.agent, x)
    }
}

/// Gradient of the averaged objective.
pub struct GlobalGradient<'a, P: ?Sized>(pub &'a P);

impl<P: Problem + ?Sized> LocalGradient for GlobalGradient<'_, P> {
    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self.0.global_gradient(x)
    }
}

/// The identically-zero objective, handy for invariance checks.
#[derive(Debug, Clone)]
pub struct ZeroProblem {
    pub n: usize,
    pub d: usize,
    pub r: usize,
}

impl Problem for ZeroProblem {
    fn agents(&self) -> usize {
        self.n
    }

    fn dims(&self) -> (usize, usize) {
        (self.d, self.r)
    }

    fn local_value(&self, _agent: usize, _x: &DenseMatrix) -> f64 {
        0.0
    }

    fn local_gradient(&self, _agent: usize, x: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::zeros(x.nrows(), x.ncols())
    }

    fn step_scale(&self) -> f64 {
        1.0
    }
}
