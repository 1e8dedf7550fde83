use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Problem;
use crate::error::{Error, Result};
use crate::matops::{top_eigenvectors, DenseMatrix};

/// How the prescribed spectrum `ξ^j` is scaled when the synthetic data matrix
/// is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataScale {
    /// `A = U diag(ξ^j) Vᵀ`: singular values of `A` are exactly `ξ^j`.
    Unit,
    /// `A = √N · U diag(ξ^j) Vᵀ` with `N` the total row count, so the sample
    /// covariance `AᵀA / N` has eigenvalues `ξ^{2j}` and each row has unit
    /// order magnitude, like the Gaussian draw it came from.
    #[default]
    SqrtRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPcaParams {
    pub n: usize,
    pub m_per_agent: usize,
    pub d: usize,
    pub r: usize,
    pub xi: f64,
    pub seed: u64,
    pub scale: DataScale,
}

impl Default for SyntheticPcaParams {
    fn default() -> Self {
        SyntheticPcaParams {
            n: 8,
            m_per_agent: 1000,
            d: 10,
            r: 5,
            xi: 0.8,
            seed: 42,
            scale: DataScale::default(),
        }
    }
}

/// Decentralized PCA: `fᵢ(X) = −½ tr(Xᵀ AᵢᵀAᵢ X)`.
///
/// Only the per-agent Gram matrices are kept; the raw rows are dropped after
/// construction.
#[derive(Debug, Clone)]
pub struct PcaProblem {
    d: usize,
    r: usize,
    grams: Vec<DenseMatrix>,
    rows_per_agent: Vec<usize>,
    reference: Option<DenseMatrix>,
    step_scale: f64,
}

impl PcaProblem {
    /// Builds the problem from explicit row blocks. The reference solution is
    /// the top-`r` eigenvector block of the pooled Gram matrix.
    pub fn from_blocks(blocks: &[DenseMatrix], r: usize, step_scale: f64) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Parameter("PCA needs at least one agent".into()))?;
        let d = first.ncols();
        if r == 0 || r > d {
            return Err(Error::Parameter(format!("need 1 <= r <= d, got r = {r}, d = {d}")));
        }
        if let Some(bad) = blocks.iter().find(|b| b.ncols() != d) {
            return Err(Error::Dimension(format!(
                "agent blocks must share d = {d} columns, found {}",
                bad.ncols()
            )));
        }
        let grams: Vec<DenseMatrix> = blocks.iter().map(|b| b.tr_mul(b)).collect();
        let rows_per_agent = blocks.iter().map(|b| b.nrows()).collect();
        let mut problem = PcaProblem {
            d,
            r,
            grams,
            rows_per_agent,
            reference: None,
            step_scale,
        };
        problem.reference = Some(problem.eigen_reference()?);
        Ok(problem)
    }

    fn eigen_reference(&self) -> Result<DenseMatrix> {
        let pooled = self.pooled_gram();
        Ok(top_eigenvectors(&pooled, self.r)?.0)
    }

    pub fn pooled_gram(&self) -> DenseMatrix {
        self.grams
            .iter()
            .fold(DenseMatrix::zeros(self.d, self.d), |acc, g| acc + g)
    }

    pub fn gram(&self, agent: usize) -> &DenseMatrix {
        &self.grams[agent]
    }

    pub fn rows_per_agent(&self) -> &[usize] {
        &self.rows_per_agent
    }
}

impl Problem for PcaProblem {
    fn agents(&self) -> usize {
        self.grams.len()
    }

    fn dims(&self) -> (usize, usize) {
        (self.d, self.r)
    }

    fn local_value(&self, agent: usize, x: &DenseMatrix) -> f64 {
        -0.5 * x.dot(&(&self.grams[agent] * x))
    }

    fn local_gradient(&self, agent: usize, x: &DenseMatrix) -> DenseMatrix {
        -(&self.grams[agent] * x)
    }

    fn step_scale(&self) -> f64 {
        self.step_scale
    }

    fn reference(&self) -> Option<&DenseMatrix> {
        self.reference.as_ref()
    }
}

/// Gaussian `B ∈ ℝ^{nm×d}` (ChaCha8 stream from `seed`, row-major draw order),
/// thin SVD `B = UΣVᵀ`, spectrum replaced by `ξ^j` (`j = 1..d`), rows split into
/// `n` contiguous blocks of `m`. The first `r` right singular vectors are the
/// reference solution.
pub fn generate_synthetic_pca(params: &SyntheticPcaParams) -> Result<PcaProblem> {
    validate(params)?;
    let SyntheticPcaParams { n, m_per_agent: m, d, r, .. } = *params;
    let (a, v) = assemble(params);
    let blocks: Vec<DenseMatrix> = (0..n)
        .map(|i| a.rows(i * m, m).into_owned())
        .collect();
    let grams = blocks.iter().map(|blk| blk.tr_mul(blk)).collect();
    Ok(PcaProblem {
        d,
        r,
        grams,
        rows_per_agent: vec![m; n],
        reference: Some(v.columns(0, r).into_owned()),
        step_scale: n as f64 / (n * m) as f64,
    })
}

fn validate(params: &SyntheticPcaParams) -> Result<()> {
    let SyntheticPcaParams {
        n,
        m_per_agent: m,
        d,
        r,
        xi,
        ..
    } = *params;
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::Parameter("n, m and d must be positive".into()));
    }
    if n * m < d {
        return Err(Error::Parameter(format!(
            "need n·m >= d for a rank-d data matrix, got {} < {d}",
            n * m
        )));
    }
    if r == 0 || r > d {
        return Err(Error::Parameter(format!("need 1 <= r <= d, got r = {r}")));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Parameter(format!("xi must lie in (0, 1), got {xi}")));
    }
    Ok(())
}

/// Data matrix and right singular vectors of a synthetic instance.
fn assemble(params: &SyntheticPcaParams) -> (DenseMatrix, DenseMatrix) {
    let rows = params.n * params.m_per_agent;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let draws: Vec<f64> = (0..rows * params.d)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let b = DenseMatrix::from_row_slice(rows, params.d, &draws);
    let svd = b.svd(true, true);
    let factor = match params.scale {
        DataScale::Unit => 1.0,
        DataScale::SqrtRows => (rows as f64).sqrt(),
    };
    let mut u = svd.u.expect("requested U");
    for j in 0..params.d {
        u.column_mut(j)
            .scale_mut(factor * params.xi.powi(j as i32 + 1));
    }
    let v_t = svd.v_t.expect("requested Vᵀ");
    (u * &v_t, v_t.transpose())
}

/// Full data matrix (all agents stacked) of a synthetic instance.
pub fn synthetic_data_matrix(params: &SyntheticPcaParams) -> Result<DenseMatrix> {
    validate(params)?;
    Ok(assemble(params).0)
}
