//! Numerical checks of the method's provable structure: surrogate
//! coercivity, the joint-error transition spectrum, sampled problem constants
//! and the empirical `O(1/K)` envelope.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, Prepared};
use crate::matops::{gram_residual, qr_orthonormalize, spectral_radius, DenseMatrix};
use crate::network::{build_joint_transition, build_topology, MixingPair, TopologyKind};
use crate::problems::{GlobalGradient, LrmcParams, Problem, SyntheticPcaParams};
use crate::solvers::average;
use crate::surrogate::{approx_grad_g, penalty_gradient, SurrogateParams};

/// Feasibility-violation cap defining the region `R`.
pub const REGION_R_RADIUS: f64 = 1.0 / 6.0;

/// `√(7r/6) + 1`, the Frobenius radius of the bounded set `B`.
pub fn ball_radius(r: usize) -> f64 {
    (7.0 * r as f64 / 6.0).sqrt() + 1.0
}

/// Seeded sampler for the regions `R = {‖XᵀX − I‖_F ≤ radius}` and
/// `B = {‖X‖_F ≤ √(7r/6) + 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSampler {
    pub d: usize,
    pub r: usize,
    /// Feasibility cap for `R`; zero yields exactly orthonormal samples.
    pub radius: f64,
    pub seed: u64,
}

impl RegionSampler {
    pub fn new(d: usize, r: usize, seed: u64) -> Self {
        RegionSampler {
            d,
            r,
            radius: REGION_R_RADIUS,
            seed,
        }
    }

    pub fn with_radius(self, radius: f64) -> Self {
        RegionSampler { radius, ..self }
    }

    fn stream(&self, salt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt);
        rng
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn violation(x: &DenseMatrix) -> f64 {
    gram_residual(x).norm()
}

/// Samples `Z + εN` with `Z` orthonormal and `N` a unit Gaussian direction.
/// `ε` is found by bisection so that the violation hits a drawn target: every
/// fourth sample targets `[0.9, 1)·radius`, the rest `[0, 1)·radius`.
pub fn sample_region_r(sampler: &RegionSampler, count: usize) -> Vec<DenseMatrix> {
    let mut rng = sampler.stream(1);
    (0..count)
        .map(|k| {
            let z = qr_orthonormalize(&gaussian(sampler.d, sampler.r, &mut rng));
            let n = gaussian(sampler.d, sampler.r, &mut rng);
            let n = &n / n.norm();
            let u: f64 = rng.random();
            let target = sampler.radius * if k % 4 == 0 { 0.9 + 0.1 * u } else { u };
            if target <= 0.0 {
                return z;
            }
            let at = |eps: f64| violation(&(&z + &n * eps));
            let mut hi = target;
            while at(hi) < target {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if at(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = &z + &n * lo;
            assert!(violation(&x) <= sampler.radius, "sample left R");
            x
        })
        .collect()
}

/// Samples of `B` with uniformly drawn radius and Gaussian direction.
pub fn sample_region_b(sampler: &RegionSampler, count: usize) -> Vec<DenseMatrix> {
    let mut rng = sampler.stream(2);
    let cap = ball_radius(sampler.r);
    (0..count).map(|_| draw_in_ball(sampler, cap, &mut rng)).collect()
}

fn draw_in_ball(sampler: &RegionSampler, cap: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = gaussian(sampler.d, sampler.r, rng);
    let u: f64 = rng.random();
    &n * (cap * u / n.norm())
}

/// Sampled pairs in `B`: even indices are independent draws, odd indices are
/// a draw and a nearby perturbation (pulled back onto the ball if needed).
fn sample_pairs_b(sampler: &RegionSampler, count: usize) -> Vec<(DenseMatrix, DenseMatrix)> {
    let mut rng = sampler.stream(3);
    let cap = ball_radius(sampler.r);
    (0..count)
        .map(|k| {
            let x = draw_in_ball(sampler, cap, &mut rng);
            let y = if k % 2 == 0 {
                draw_in_ball(sampler, cap, &mut rng)
            } else {
                let dir = gaussian(sampler.d, sampler.r, &mut rng);
                let y = &x + &dir * (1e-3 * cap / dir.norm());
                let norm = y.norm();
                if norm > cap {
                    y * (cap / norm)
                } else {
                    y
                }
            };
            (x, y)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `‖H‖² − ‖G‖² − β‖XᵀX − I‖²` seen.
    pub worst_margin: f64,
}

/// Checks `‖H(X)‖² ≥ ‖G(X)‖² + β‖XᵀX − I‖²` for the global maps on every
/// sample, up to `1e−10·(1 + rhs)`. Meaningful for samples in `R` with
/// `β ≥ (6 + 21·C₀)/5`.
pub fn check_coercivity<P: Problem + ?Sized>(
    problem: &P,
    params: SurrogateParams,
    samples: &[DenseMatrix],
) -> CoercivityReport {
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for x in samples {
        let g = approx_grad_g(&GlobalGradient(problem), x);
        let h = &g + penalty_gradient(x) * params.beta;
        let lhs = h.norm_squared();
        let rhs = g.norm_squared() + params.beta * gram_residual(x).norm_squared();
        let margin = lhs - rhs;
        if margin < -1e-10 * (1.0 + rhs) {
            violations += 1;
        }
        worst_margin = worst_margin.min(margin);
    }
    CoercivityReport {
        samples: samples.len(),
        violations,
        worst_margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub rho_p: f64,
    /// `‖P[0; u]‖_F / ‖u‖_F` for a zero-sum `u`; NaN for a single agent.
    pub witness_ratio: f64,
    pub witness_ok: bool,
    /// `C` in `‖Pᵏ‖_F ≤ C·(ρ + 0.05)ᵏ`, fitted over `k ≤ 50`.
    pub decay_constant: f64,
    /// Whether the fitted bound also holds for `50 < k ≤ 200`.
    pub decay_ok: bool,
    pub pass: bool,
}

/// Spectral contraction of the joint-error matrix `P`, together with the
/// witness that `P` is not a Frobenius contraction and a power-decay check.
pub fn check_transition_spectrum(mp: &MixingPair) -> Result<SpectrumReport> {
    let p = build_joint_transition(mp);
    let n = mp.n();
    let rho_p = spectral_radius(&p)?;

    let (witness_ratio, witness_ok) = if n >= 2 {
        let mut z = nalgebra::DVector::<f64>::zeros(2 * n);
        z[n] = 1.0;
        z[n + 1] = -1.0;
        let ratio = (&p * &z).norm() / 2f64.sqrt();
        (ratio, (ratio - 2f64.sqrt()).abs() <= 1e-10)
    } else {
        (f64::NAN, true)
    };

    let base = rho_p + 0.05;
    let mut power = DenseMatrix::identity(2 * n, 2 * n);
    let mut decay_constant = 0.0f64;
    let mut decay_ok = true;
    for k in 0..=200 {
        let ratio = power.norm() / base.powi(k);
        if k <= 50 {
            decay_constant = decay_constant.max(ratio);
        } else if !(ratio <= decay_constant * (1.0 + 1e-9)) {
            decay_ok = false;
        }
        power = &p * power;
    }
    Ok(SpectrumReport {
        rho_p,
        witness_ratio,
        witness_ok,
        decay_constant,
        decay_ok,
        pass: rho_p < 1.0 && witness_ok && decay_ok,
    })
}

/// Sampled constants. Lipschitz hats are maxima of difference quotients over
/// pairs in `B` (`L_f` also over their images `XXᵀX`); supremum hats are
/// maxima over samples in `R`. All are lower bounds on the true constants.
/// The `β`-dependent entries (`L_H`, `L_h`, `M_H`) use `β = beta_floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub l_f: f64,
    pub l_g: f64,
    pub l_b: f64,
    pub l_h_map: f64,
    pub l_h: f64,
    pub m_g: f64,
    pub m_h: f64,
    pub c0: f64,
    /// `max{56·L_f², (6 + 21·C₀)/5, 12√2·(M_g + 1)}`.
    pub beta_floor: f64,
    pub rho_p: Option<f64>,
    pub sigma2: Option<f64>,
}

impl TheoryConstants {
    pub fn floor_from(l_f: f64, c0: f64, m_g: f64) -> f64 {
        (56.0 * l_f * l_f)
            .max((6.0 + 21.0 * c0) / 5.0)
            .max(12.0 * 2f64.sqrt() * (m_g + 1.0))
    }

    /// Attaches the network quantities `ρ(P)` and `σ₂(W)`.
    pub fn with_network(mut self, mp: &MixingPair) -> Result<Self> {
        self.rho_p = Some(spectral_radius(&build_joint_transition(mp))?);
        self.sigma2 = Some(mp.sigma2);
        Ok(self)
    }
}

fn cube(x: &DenseMatrix) -> DenseMatrix {
    x * x.tr_mul(x)
}

fn quotient(a: &DenseMatrix, b: &DenseMatrix, x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let den = (x - y).norm();
    if den == 0.0 {
        0.0
    } else {
        (a - b).norm() / den
    }
}

/// `∇h(X) = 3/2∇f(X) − 1/2∇f(Y)XᵀX − X sym(Xᵀ∇f(Y)) + βX(XᵀX − I)`,
/// `Y = XXᵀX`, for the global objective.
fn potential_gradient<P: Problem + ?Sized>(problem: &P, x: &DenseMatrix, beta: f64) -> DenseMatrix {
    let gram = x.tr_mul(x);
    let gy = problem.global_gradient(&(x * &gram));
    let m = x.tr_mul(&gy);
    let sym = (&m + m.transpose()) * 0.5;
    problem.global_gradient(x) * 1.5 - &gy * &gram * 0.5 - x * sym + penalty_gradient(x) * beta
}

pub fn estimate_constants<P: Problem + ?Sized>(
    problem: &P,
    sampler: &RegionSampler,
    pair_count: usize,
) -> Result<TheoryConstants> {
    if pair_count == 0 {
        return Err(Error::Parameter("pair_count must be positive".into()));
    }
    if problem.dims() != (sampler.d, sampler.r) {
        return Err(Error::Parameter(format!(
            "sampler is {}x{}, problem is {:?}",
            sampler.d,
            sampler.r,
            problem.dims()
        )));
    }
    let n = problem.agents();
    let pairs = sample_pairs_b(sampler, pair_count);
    let region = sample_region_r(sampler, pair_count);

    let (mut l_f, mut l_g, mut l_b) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in &pairs {
        let (cx, cy) = (cube(x), cube(y));
        l_b = l_b.max(quotient(&penalty_gradient(x), &penalty_gradient(y), x, y));
        for i in 0..n {
            let gx = problem.local_gradient(i, x);
            let gy = problem.local_gradient(i, y);
            l_f = l_f.max(quotient(&gx, &gy, x, y));
            let gcx = problem.local_gradient(i, &cx);
            let gcy = problem.local_gradient(i, &cy);
            l_f = l_f.max(quotient(&gcx, &gcy, &cx, &cy));
            let fx = |z: &DenseMatrix| problem.local_gradient(i, z);
            l_g = l_g.max(quotient(&approx_grad_g(&fx, x), &approx_grad_g(&fx, y), x, y));
        }
    }
    let (mut m_g, mut c0) = (0.0f64, 0.0f64);
    for x in &region {
        let cx = cube(x);
        for i in 0..n {
            c0 = c0.max(problem.local_gradient(i, &cx).norm());
            let fx = |z: &DenseMatrix| problem.local_gradient(i, z);
            m_g = m_g.max(approx_grad_g(&fx, x).norm());
        }
    }
    let beta_floor = TheoryConstants::floor_from(l_f, c0, m_g);

    let mut l_h = 0.0f64;
    for (x, y) in &pairs {
        let hx = potential_gradient(problem, x, beta_floor);
        let hy = potential_gradient(problem, y, beta_floor);
        l_h = l_h.max(quotient(&hx, &hy, x, y));
    }
    let mut m_h = 0.0f64;
    for x in &region {
        let pen = penalty_gradient(x) * beta_floor;
        for i in 0..n {
            let fx = |z: &DenseMatrix| problem.local_gradient(i, z);
            m_h = m_h.max((approx_grad_g(&fx, x) + &pen).norm());
        }
    }
    Ok(TheoryConstants {
        l_f,
        l_g,
        l_b,
        l_h_map: l_g + beta_floor * l_b,
        l_h,
        m_g,
        m_h,
        c0,
        beta_floor,
        rho_p: None,
        sigma2: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Least-squares slope of `log S(K)` against `log K`; `−∞` when the
    /// series is identically zero.
    pub slope: f64,
    pub points: usize,
    pub pass: bool,
}

/// Largest slope accepted as an `O(1/K)` envelope.
pub const RATE_SLOPE_MAX: f64 = -0.8;

/// Fits the decay of `S(K) = (1/(K+1)) Σ_{k≤K} vₖ²` over 25 log-spaced
/// `K ∈ [k_min, k_max]`; passes when the slope is at most −0.8.
pub fn check_rate(values: &[f64], k_min: usize, k_max: usize) -> Result<RateReport> {
    if k_min < 10 || k_max < 10 * k_min {
        return Err(Error::Parameter(format!(
            "need k_max >= 10·k_min >= 100, got k_min = {k_min}, k_max = {k_max}"
        )));
    }
    if values.len() <= k_max {
        return Err(Error::Parameter(format!(
            "trace has {} values, need at least {}",
            values.len(),
            k_max + 1
        )));
    }
    let mut cumulative = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    for v in &values[..=k_max] {
        acc += v * v;
        cumulative.push(acc);
    }
    let (lo, hi) = ((k_min as f64).ln(), (k_max as f64).ln());
    let mut ks: Vec<usize> = (0..25)
        .map(|j| (lo + (hi - lo) * j as f64 / 24.0).exp().round() as usize)
        .collect();
    ks.dedup();
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .map(|&k| (k as f64, cumulative[k] / (k + 1) as f64))
        .filter(|&(_, s)| s > 0.0)
        .map(|(k, s)| (k.ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(RateReport {
            slope: f64::NEG_INFINITY,
            points: pts.len(),
            pass: true,
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateReport {
        slope,
        points: pts.len(),
        pass: slope <= RATE_SLOPE_MAX,
    })
}

/// [`check_rate`] applied to feasibility values `‖x̄ᵀx̄ − I‖_F`.
pub fn check_feasibility_rate(values: &[f64], k_min: usize, k_max: usize) -> Result<RateReport> {
    check_rate(values, k_min, k_max)
}

/// Largest residuals of the averaged recursion along a run:
/// `‖s̄ₖ + αH̄ₖ‖ / (1 + ‖αH̄ₖ‖)` and `‖x̄ₖ₊₁ − x̄ₖ + αH̄ₖ‖ / (1 + ‖x̄ₖ‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityReport {
    pub iterations: usize,
    pub dual_residual: f64,
    pub primal_residual: f64,
}

pub fn check_averaged_identities(
    prepared: &Prepared,
    settings: &harness::SolverSettings,
) -> Result<IdentityReport> {
    let (alpha, _) = prepared.resolve_steps(settings)?;
    let mut report = IdentityReport::default();
    let mut previous: Option<(DenseMatrix, DenseMatrix)> = None;
    let out = harness::run_observed(prepared, settings, usize::MAX, |state| {
        let x_bar = average(&state.x);
        let ah = average(&state.h_cache) * alpha;
        let s_bar = average(&state.s);
        report.dual_residual = report
            .dual_residual
            .max((&s_bar + &ah).norm() / (1.0 + ah.norm()));
        if let Some((px, pah)) = &previous {
            let r = (&x_bar - px + pah).norm() / (1.0 + px.norm());
            report.primal_residual = report.primal_residual.max(r);
        }
        previous = Some((x_bar, ah));
    })?;
    report.iterations = out.iterations;
    if let harness::Termination::Diverged { iter, reason } = out.termination {
        return Err(Error::Divergence { iter, reason });
    }
    Ok(report)
}

/// One line of the `theory` report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub metrics: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} {} {}", self.name, verdict, self.metrics)
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "transition_spectrum",
    "frobenius_witness",
    "coercivity_pca",
    "coercivity_lrmc",
    "penalty_lipschitz",
    "averaged_identity",
    "rate_stationarity",
    "rate_feasibility",
];

/// Every `(topology, n, θ)` combination of the spectrum sweep.
pub fn spectrum_sweep() -> Vec<(TopologyKind, usize, f64)> {
    let kinds = [
        TopologyKind::Ring,
        TopologyKind::Star,
        TopologyKind::Complete,
        TopologyKind::ErdosRenyi { p: 0.4 },
        TopologyKind::ErdosRenyi { p: 0.6 },
        TopologyKind::ErdosRenyi { p: 0.8 },
    ];
    let mut out = Vec::new();
    for kind in kinds {
        for n in [4, 8, 16] {
            for theta in [0.1, 0.25, 0.5] {
                out.push((kind, n, theta));
            }
        }
    }
    out
}

/// Sample and budget sizes for [`run_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub samples: usize,
    pub pairs: usize,
    pub rate_budget: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            samples: 1000,
            pairs: 200,
            rate_budget: 5000,
            seed: 11,
        }
    }
}

fn pca_template() -> ExperimentConfig {
    ExperimentConfig::defaults_for("pca_synthetic").expect("built-in defaults")
}

fn coercivity_line<P: Problem + ?Sized>(
    name: &'static str,
    problem: &P,
    opts: &SuiteOptions,
) -> Result<CheckResult> {
    let (d, r) = problem.dims();
    let sampler = RegionSampler::new(d, r, opts.seed);
    let consts = estimate_constants(problem, &sampler, opts.pairs)?;
    let samples = sample_region_r(&RegionSampler::new(d, r, opts.seed ^ 0x5eed), opts.samples);
    let rep = check_coercivity(problem, SurrogateParams { beta: consts.beta_floor }, &samples);
    Ok(CheckResult {
        name,
        pass: rep.violations == 0,
        metrics: format!(
            "samples={} violations={} worst_margin={:e} beta={:e}",
            rep.samples, rep.violations, rep.worst_margin, consts.beta_floor
        ),
    })
}

/// Runs one named check on the default instances.
pub fn run_check(name: &str, opts: &SuiteOptions) -> Result<CheckResult> {
    Ok(match name {
        "transition_spectrum" => {
            let mut worst = 0.0f64;
            let mut failures = 0;
            let sweep = spectrum_sweep();
            for &(kind, n, theta) in &sweep {
                let t = build_topology(kind, n, opts.seed)?;
                let rep = check_transition_spectrum(&MixingPair::metropolis(&t, theta)?)?;
                worst = worst.max(rep.rho_p);
                if !(rep.rho_p < 1.0 && rep.decay_ok) {
                    failures += 1;
                }
            }
            CheckResult {
                name: "transition_spectrum",
                pass: failures == 0,
                metrics: format!("combos={} failures={failures} max_rho={worst:.6}", sweep.len()),
            }
        }
        "frobenius_witness" => {
            let t = build_topology(TopologyKind::Ring, 4, opts.seed)?;
            let rep = check_transition_spectrum(&MixingPair::metropolis(&t, 0.5)?)?;
            CheckResult {
                name: "frobenius_witness",
                pass: rep.witness_ok && rep.rho_p < 1.0,
                metrics: format!(
                    "ratio={:.15} deviation={:e} rho={:.6}",
                    rep.witness_ratio,
                    (rep.witness_ratio - 2f64.sqrt()).abs(),
                    rep.rho_p
                ),
            }
        }
        "coercivity_pca" => {
            let p = crate::problems::generate_synthetic_pca(&SyntheticPcaParams::default())?;
            coercivity_line("coercivity_pca", &p, opts)?
        }
        "coercivity_lrmc" => {
            let p = crate::problems::generate_lrmc(&LrmcParams::default())?;
            coercivity_line("coercivity_lrmc", &p, opts)?
        }
        "penalty_lipschitz" => {
            let p = crate::problems::ZeroProblem { n: 2, d: 10, r: 5 };
            let c = estimate_constants(&p, &RegionSampler::new(10, 5, opts.seed), opts.pairs)?;
            let bound = 3.0 * ball_radius(5).powi(2) + 1.0;
            CheckResult {
                name: "penalty_lipschitz",
                pass: c.l_b <= bound && c.l_b > 0.0,
                metrics: format!("l_b={:.6} bound={bound:.6}", c.l_b),
            }
        }
        "averaged_identity" => {
            let mut cfg = pca_template();
            cfg.solver.max_iters = 2000;
            cfg.solver.tol = 0.0;
            let prepared = harness::prepare(&cfg)?;
            let rep = check_averaged_identities(&prepared, &cfg.solver)?;
            CheckResult {
                name: "averaged_identity",
                pass: rep.dual_residual <= 1e-11 && rep.primal_residual <= 1e-11,
                metrics: format!(
                    "iterations={} dual={:e} primal={:e}",
                    rep.iterations, rep.dual_residual, rep.primal_residual
                ),
            }
        }
        "rate_stationarity" | "rate_feasibility" => {
            let trace = rate_trace(opts.rate_budget)?;
            let k_max = opts.rate_budget;
            let k_min = k_max / 10;
            let (name, rep) = if name == "rate_stationarity" {
                let v: Vec<f64> = trace.iter().map(|r| r.surrogate_norm).collect();
                ("rate_stationarity", check_rate(&v, k_min, k_max)?)
            } else {
                let v: Vec<f64> = trace.iter().map(|r| r.feasibility).collect();
                ("rate_feasibility", check_feasibility_rate(&v, k_min, k_max)?)
            };
            CheckResult {
                name,
                pass: rep.pass,
                metrics: format!("slope={:.4} k_min={k_min} k_max={k_max}", rep.slope),
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown check {other:?} (known: {})",
                CHECK_NAMES.join(", ")
            )))
        }
    })
}

/// Fixed-budget synthetic PCA RF-EXTRA trace with every iterate recorded.
pub fn rate_trace(budget: usize) -> Result<Vec<harness::TraceRecord>> {
    let mut cfg = pca_template();
    cfg.solver.max_iters = budget;
    cfg.solver.tol = 0.0;
    cfg.trace_every = 1;
    Ok(harness::run_experiment(&cfg)?.trace)
}

pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    CHECK_NAMES.iter().map(|name| run_check(name, opts)).collect()
}
