//! Retraction-free search direction.
//!
//! For a local objective `f` the penalty is `b(X) = ¼‖XᵀX − I‖²_F` and the
//! approximate manifold gradient is
//!
//! ```text
//! G(X) = ∇f(XXᵀX)·(3I − XᵀX)/2 − X·sym(Xᵀ∇f(XXᵀX))
//! H(X) = G(X) + β·X(XᵀX − I)
//! ```
//!
//! Both use a single gradient evaluation, at the projected point `XXᵀX`.

use crate::error::{Error, Result};
use crate::matops::{gram_residual, sym_unchecked, DenseMatrix};

/// Feasibility slack accepted by [`riemannian_gradient`].
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Euclidean gradient of one local objective.
pub trait LocalGradient {
    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix;
}

impl<F> LocalGradient for F
where
    F: Fn(&DenseMatrix) -> DenseMatrix,
{
    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    pub beta: f64,
}

impl SurrogateParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
        }
        Ok(SurrogateParams { beta })
    }
}

pub fn penalty_value(x: &DenseMatrix) -> f64 {
    0.25 * gram_residual(x).norm_squared()
}

/// `∇b(X) = X(XᵀX − I)`.
pub fn penalty_gradient(x: &DenseMatrix) -> DenseMatrix {
    x * gram_residual(x)
}

/// Shared body of `G` and `H`; returns `(G, XᵀX − I)` so callers can add the
/// penalty term without recomputing the Gram matrix.
fn approx_grad_parts<F: LocalGradient + ?Sized>(
    gradf: &F,
    x: &DenseMatrix,
) -> (DenseMatrix, DenseMatrix) {
    let r = x.ncols();
    let gram = x.tr_mul(x);
    let grad = gradf.gradient(&(x * &gram));
    // (3I − XᵀX)/2
    let mut weight = &gram * -0.5;
    for i in 0..r {
        weight[(i, i)] += 1.5;
    }
    let normal = x * sym_unchecked(&x.tr_mul(&grad));
    let g = &grad * weight - normal;
    let mut q = gram;
    for i in 0..r {
        q[(i, i)] -= 1.0;
    }
    (g, q)
}

pub fn approx_grad_g<F: LocalGradient + ?Sized>(gradf: &F, x: &DenseMatrix) -> DenseMatrix {
    approx_grad_parts(gradf, x).0
}

pub fn surrogate_h<F: LocalGradient + ?Sized>(
    gradf: &F,
    x: &DenseMatrix,
    params: SurrogateParams,
) -> DenseMatrix {
    let (g, q) = approx_grad_parts(gradf, x);
    g + x * q * params.beta
}

/// `∇f(X) − X·sym(Xᵀ∇f(X))` at a point of the Stiefel manifold.
pub fn riemannian_gradient<F: LocalGradient + ?Sized>(
    gradf: &F,
    x: &DenseMatrix,
) -> Result<DenseMatrix> {
    let violation = gram_residual(x).norm();
    if violation > FEASIBILITY_TOL {
        return Err(Error::Precondition(format!(
            "riemannian_gradient needs a feasible point, ‖XᵀX − I‖_F = {violation:e}"
        )));
    }
    Ok(tangent_projection(x, &gradf.gradient(x)))
}

/// Projects an ambient direction onto the tangent space at feasible `x`.
pub fn tangent_projection(x: &DenseMatrix, ambient: &DenseMatrix) -> DenseMatrix {
    ambient - x * sym_unchecked(&x.tr_mul(ambient))
}
