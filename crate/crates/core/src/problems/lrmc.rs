use nalgebra::{Cholesky, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Problem;
use crate::error::{Error, Result};
use crate::matops::DenseMatrix;

pub const DEFAULT_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LrmcParams {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub t: usize,
    pub noise: f64,
    pub seed: u64,
    pub ridge: f64,
    /// Multiplies the information-theoretic sampling rate `r(d+T−r)/(dT)`.
    pub oversampling: f64,
    /// Observe every entry (overrides `oversampling`).
    pub full_mask: bool,
}

impl Default for LrmcParams {
    fn default() -> Self {
        LrmcParams {
            n: 8,
            d: 100,
            r: 5,
            t: 1000,
            noise: 1e-3,
            seed: 42,
            ridge: DEFAULT_RIDGE,
            oversampling: 1.0,
            full_mask: false,
        }
    }
}

/// Observed entries of one data column.
#[derive(Debug, Clone, Default)]
struct ObservedColumn {
    rows: Vec<usize>,
    values: Vec<f64>,
}

/// Decentralized low-rank matrix completion on column blocks:
///
/// `fᵢ(X) = min_V ½‖P_Ωᵢ ⊙ (XV − Aᵢ)‖² + ½·ridge·‖V‖²`
///
/// The inner minimizer is solved column by column from the normal equations;
/// columns with no observation get a zero factor.
#[derive(Debug, Clone)]
pub struct LrmcProblem {
    d: usize,
    r: usize,
    t: usize,
    ridge: f64,
    mask_rate: f64,
    /// Full target matrix `A` (d × T) and its observation mask.
    target: DenseMatrix,
    mask: Vec<bool>,
    /// Column range `[start, end)` owned by each agent.
    ranges: Vec<(usize, usize)>,
    columns: Vec<ObservedColumn>,
    left_factor: DenseMatrix,
}

impl LrmcProblem {
    /// Assembles a problem from an explicit target, mask (column-major, `d·T`)
    /// and contiguous column partition into `n` equal blocks.
    pub fn from_parts(
        target: DenseMatrix,
        mask: Vec<bool>,
        n: usize,
        r: usize,
        ridge: f64,
    ) -> Result<Self> {
        let (d, t) = target.shape();
        if mask.len() != d * t {
            return Err(Error::Dimension(format!(
                "mask has {} entries, target is {d}x{t}",
                mask.len()
            )));
        }
        if n == 0 || t % n != 0 {
            return Err(Error::Parameter(format!(
                "T = {t} columns cannot be split evenly across n = {n} agents"
            )));
        }
        if r == 0 || r > d.min(t) {
            return Err(Error::Parameter(format!("need 1 <= r <= min(d, T), got {r}")));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::Parameter(format!("ridge must be nonnegative, got {ridge}")));
        }
        let width = t / n;
        let ranges = (0..n).map(|i| (i * width, (i + 1) * width)).collect();
        let columns = (0..t)
            .map(|c| {
                let mut col = ObservedColumn::default();
                for row in 0..d {
                    if mask[c * d + row] {
                        col.rows.push(row);
                        col.values.push(target[(row, c)]);
                    }
                }
                col
            })
            .collect();
        let observed = mask.iter().filter(|&&m| m).count();
        Ok(LrmcProblem {
            d,
            r,
            t,
            ridge,
            mask_rate: observed as f64 / (d * t) as f64,
            target,
            mask,
            ranges,
            columns,
            left_factor: DenseMatrix::zeros(d, r),
        })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    /// Fraction of observed entries over the whole matrix.
    pub fn observed_fraction(&self) -> f64 {
        self.mask_rate
    }

    pub fn total_columns(&self) -> usize {
        self.t
    }

    pub fn column_range(&self, agent: usize) -> (usize, usize) {
        self.ranges[agent]
    }

    pub fn target(&self) -> &DenseMatrix {
        &self.target
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[col * self.d + row]
    }

    /// Gaussian left factor `L` of the generating model.
    pub fn left_factor(&self) -> &DenseMatrix {
        &self.left_factor
    }

    /// Least-squares coefficients of one column; zero when unobserved.
    fn solve_column(&self, x: &DenseMatrix, col: &ObservedColumn) -> DVector<f64> {
        let r = self.r;
        if col.rows.is_empty() {
            return DVector::zeros(r);
        }
        let mut normal = DenseMatrix::zeros(r, r);
        let mut rhs = DVector::zeros(r);
        for (&row, &value) in col.rows.iter().zip(&col.values) {
            let xr = x.row(row);
            for a in 0..r {
                rhs[a] += xr[a] * value;
                for b in 0..=a {
                    normal[(a, b)] += xr[a] * xr[b];
                }
            }
        }
        for a in 0..r {
            normal[(a, a)] += self.ridge;
            for b in 0..a {
                normal[(b, a)] = normal[(a, b)];
            }
        }
        match Cholesky::new(normal.clone()) {
            Some(chol) => chol.solve(&rhs),
            // Only reachable with ridge = 0 on a rank-deficient block: fall back
            // to the minimum-norm solution.
            None => normal
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(r)),
        }
    }

    /// `Vᵢ(X)`, the `r × Tᵢ` factor minimizing the local objective.
    pub fn local_factor(&self, agent: usize, x: &DenseMatrix) -> DenseMatrix {
        let (start, end) = self.ranges[agent];
        let mut v = DenseMatrix::zeros(self.r, end - start);
        for (k, c) in (start..end).enumerate() {
            v.set_column(k, &self.solve_column(x, &self.columns[c]));
        }
        v
    }

    /// Value and gradient together; they share the inner solves.
    fn value_and_gradient(&self, agent: usize, x: &DenseMatrix, want_grad: bool) -> (f64, DenseMatrix) {
        let (start, end) = self.ranges[agent];
        let mut grad = if want_grad {
            DenseMatrix::zeros(self.d, self.r)
        } else {
            DenseMatrix::zeros(0, 0)
        };
        let mut value = 0.0;
        for col in &self.columns[start..end] {
            if col.rows.is_empty() {
                continue;
            }
            let v = self.solve_column(x, col);
            value += 0.5 * self.ridge * v.norm_squared();
            for (&row, &target) in col.rows.iter().zip(&col.values) {
                let residual = x.row(row).dot(&v.transpose()) - target;
                value += 0.5 * residual * residual;
                if want_grad {
                    for a in 0..self.r {
                        grad[(row, a)] += residual * v[a];
                    }
                }
            }
        }
        (value, grad)
    }
}

impl Problem for LrmcProblem {
    fn agents(&self) -> usize {
        self.ranges.len()
    }

    fn dims(&self) -> (usize, usize) {
        (self.d, self.r)
    }

    fn local_value(&self, agent: usize, x: &DenseMatrix) -> f64 {
        self.value_and_gradient(agent, x, false).0
    }

    /// `(P_Ωᵢ ⊙ (X Vᵢ(X) − Aᵢ)) Vᵢ(X)ᵀ`, exact by the envelope property of the
    /// inner minimization.
    fn local_gradient(&self, agent: usize, x: &DenseMatrix) -> DenseMatrix {
        self.value_and_gradient(agent, x, true).1
    }

    /// `α = β̂ · n`.
    fn step_scale(&self) -> f64 {
        self.ranges.len() as f64
    }
}

/// `A = L R + noise·E` with Gaussian `L` (d×r), `R` (r×T), `E` (d×T), drawn in
/// that order from one ChaCha8 stream (column-major within each matrix), then
/// an i.i.d. Bernoulli(μ) mask with `μ = oversampling · r(d+T−r)/(dT)`.
pub fn generate_lrmc(params: &LrmcParams) -> Result<LrmcProblem> {
    let LrmcParams {
        n,
        d,
        r,
        t,
        noise,
        seed,
        ridge,
        oversampling,
        full_mask,
    } = *params;
    if n == 0 || d == 0 || t == 0 {
        return Err(Error::Parameter("n, d and T must be positive".into()));
    }
    if r == 0 || r > d.min(t) {
        return Err(Error::Parameter(format!("need 1 <= r <= min(d, T), got {r}")));
    }
    if t % n != 0 {
        return Err(Error::Parameter(format!("T = {t} is not divisible by n = {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Parameter(format!("noise must be nonnegative, got {noise}")));
    }
    if !(oversampling > 0.0) {
        return Err(Error::Parameter(format!(
            "oversampling must be positive, got {oversampling}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |rows: usize, cols: usize| {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    };
    let left = gaussian(d, r);
    let right = gaussian(r, t);
    let noise_draw = gaussian(d, t);
    let target = &left * &right + noise_draw * noise;
    let mu = (oversampling * sampling_rate(d, r, t)).min(1.0);
    let mask: Vec<bool> = if full_mask {
        vec![true; d * t]
    } else {
        (0..d * t).map(|_| rng.random_bool(mu)).collect()
    };
    let mut problem = LrmcProblem::from_parts(target, mask, n, r, ridge)?;
    problem.left_factor = left;
    Ok(problem)
}

/// `r(d+T−r)/(dT)`: degrees of freedom of a rank-`r` matrix over its size.
pub fn sampling_rate(d: usize, r: usize, t: usize) -> f64 {
    (r * (d + t - r)) as f64 / (d * t) as f64
}
