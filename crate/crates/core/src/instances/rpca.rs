use super::{instance_rng, RPCA_STREAM};
use crate::dense;
use crate::error::{check_dim, Error, Result};
use crate::linops::LinearMap;
use crate::proxcore::ProxFn;
use crate::solvers::{solve, Algorithm, SaddleProblem, SolveReport, SolverConfig, TolKind};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

/// `H = X* + Z*` with `X* = UV` of rank `r` and `Z*` supported on
/// `round(0.15·mn)` entries drawn uniformly from `[−30, 30]`.
#[derive(Debug, Clone)]
pub struct RpcaInstance {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    pub x_star: DMatrix<f64>,
    pub z_star: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub lambda: f64,
}

pub(super) fn support_size(m: usize, n: usize) -> usize {
    (0.15 * (m * n) as f64).round() as usize
}

pub(super) fn default_lambda(m: usize, n: usize) -> f64 {
    1.0 / (m.max(n) as f64).sqrt()
}

pub fn make_rpca(m: usize, n: usize, r: usize, seed: u64) -> Result<RpcaInstance> {
    if m == 0 || n == 0 || r > m.min(n) {
        return Err(Error::InvalidParams(format!("need r ≤ min(m, n) with m, n > 0, got ({m}, {n}, {r})")));
    }
    let mut rng = instance_rng(seed, RPCA_STREAM);
    let u = DMatrix::<f64>::from_fn(m, r, |_, _| rng.sample(StandardNormal));
    let v = DMatrix::<f64>::from_fn(r, n, |_, _| rng.sample(StandardNormal));
    let x_star = u * v;
    let mut z_star = DMatrix::zeros(m, n);
    let mut support = sample(&mut rng, m * n, support_size(m, n)).into_vec();
    support.sort_unstable();
    for idx in support {
        let mut val = rng.random_range(-30.0..=30.0);
        while val == 0.0 {
            val = rng.random_range(-30.0..=30.0);
        }
        z_star[idx] = val;
    }
    let inst = RpcaInstance { m, n, r, seed, h: &x_star + &z_star, x_star, z_star, lambda: default_lambda(m, n) };
    inst.check_invariants()?;
    Ok(inst)
}

impl RpcaInstance {
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParams(format!("λ must be positive, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// Exact rank, support size and entry range.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parse(msg));
        if self.x_star.shape() != (self.m, self.n) || self.z_star.shape() != (self.m, self.n) {
            return fail("matrix shape does not match the header".into());
        }
        let rank = numerical_rank(&self.x_star)?;
        if rank != self.r {
            return fail(format!("rank(X*) = {rank}, expected {}", self.r));
        }
        let nnz = self.z_star.iter().filter(|v| **v != 0.0).count();
        if nnz != support_size(self.m, self.n) {
            return fail(format!("Z* has {nnz} nonzeros, expected {}", support_size(self.m, self.n)));
        }
        if self.z_star.iter().any(|v| v.abs() > 30.0) {
            return fail("Z* has entries outside [−30, 30]".into());
        }
        Ok(())
    }
}

fn numerical_rank(x: &DMatrix<f64>) -> Result<usize> {
    let s = dense::singular_values(x)?;
    if s.is_empty() || s[0] == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|v| **v > 1e-8 * s[0]).count())
}

/// `min ‖X‖_* + λ‖Z‖₁ + ⟨X + Z, Y⟩ − ⟨H, Y⟩` on column-major stacked `(X, Z)`.
pub fn rpca_problem(inst: &RpcaInstance) -> Result<SaddleProblem> {
    let mn = inst.m * inst.n;
    SaddleProblem::new(
        ProxFn::BlockSum(vec![(mn, ProxFn::Nuclear { rows: inst.m, cols: inst.n }), (mn, ProxFn::L1(inst.lambda))]),
        ProxFn::Linear(DVector::from_column_slice(inst.h.as_slice())),
        LinearMap::StackedIdentity { blocks: 2, dim: mn },
    )
}

#[derive(Debug, Clone)]
pub struct RpcaOutcome {
    pub x_hat: DMatrix<f64>,
    pub z_hat: DMatrix<f64>,
    pub report: SolveReport,
    /// `‖[I I]‖`, the unit of `γ` and `μ`.
    pub a_norm: f64,
}

/// Two-block run with `γ = p₁‖A‖`, `μ = p₂‖A‖`, `τ = γ`, Euclidean kernels
/// and the successive-change rule at `1e-5`.
pub fn rpca_solve(inst: &RpcaInstance, algorithm: Algorithm, p1: f64, p2: f64, sigma: f64, max_iter: usize) -> Result<RpcaOutcome> {
    rpca_solve_tol(inst, algorithm, p1, p2, sigma, max_iter, 1e-5)
}

pub fn rpca_solve_tol(
    inst: &RpcaInstance,
    algorithm: Algorithm,
    p1: f64,
    p2: f64,
    sigma: f64,
    max_iter: usize,
    tol: f64,
) -> Result<RpcaOutcome> {
    if !(p1 > 0.0 && p2 > 0.0) || !p1.is_finite() || !p2.is_finite() {
        return Err(Error::InvalidParams(format!("scale factors must be positive, got ({p1}, {p2})")));
    }
    let problem = rpca_problem(inst)?;
    let a_norm = problem.a.norm();
    let gamma = p1 * a_norm;
    let mu = p2 * a_norm;
    let config = match algorithm {
        Algorithm::Tbda => SolverConfig::tbda(gamma, mu, gamma, sigma),
        Algorithm::Spida => SolverConfig::spida(gamma, mu, gamma),
        Algorithm::Pdhg => SolverConfig::pdhg(gamma, mu, sigma),
        Algorithm::Ahpd => SolverConfig::ahpd(gamma, mu),
        other => return Err(Error::Unsupported(format!("{other} is not part of the RPCA benchmark"))),
    }
    .with_max_iter(max_iter)
    .with_tol(tol, TolKind::SuccessiveChange)
    .with_monitor(false);
    let mn = inst.m * inst.n;
    let report = solve(&problem, &config, &DVector::zeros(2 * mn), &DVector::zeros(mn))?;
    let x_hat = DMatrix::from_column_slice(inst.m, inst.n, report.x.rows(0, mn).as_slice());
    let z_hat = DMatrix::from_column_slice(inst.m, inst.n, report.x.rows(mn, mn).as_slice());
    Ok(RpcaOutcome { x_hat, z_hat, report, a_norm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaMetrics {
    pub rank: usize,
    pub nnz: usize,
    pub rerr: f64,
}

/// Rank above `1e-8·σ₁`, nonzeros above `1e-8·max|Ẑ|`, and
/// `‖X̂ + Ẑ − X* − Z*‖_F / ‖X* + Z*‖_F`.
pub fn rpca_metrics(x_hat: &DMatrix<f64>, z_hat: &DMatrix<f64>, x_star: &DMatrix<f64>, z_star: &DMatrix<f64>) -> Result<RpcaMetrics> {
    let shape = x_star.shape();
    for s in [x_hat.shape(), z_hat.shape(), z_star.shape()] {
        check_dim(shape.0, s.0)?;
        check_dim(shape.1, s.1)?;
    }
    let rank = numerical_rank(x_hat)?;
    let zmax = z_hat.amax();
    let nnz = if zmax == 0.0 { 0 } else { z_hat.iter().filter(|v| v.abs() > 1e-8 * zmax).count() };
    let truth = x_star + z_star;
    let den = truth.norm();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let rerr = (x_hat + z_hat - truth).norm() / den;
    Ok(RpcaMetrics { rank, nnz, rerr })
}
