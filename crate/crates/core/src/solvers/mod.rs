//! The TBDA family and its baselines.

mod ergodic;
mod monitor;
mod run;
mod steps;

pub use ergodic::{ergodic_average, ErgodicAccumulator, ErgodicScheme, Trajectory};
pub use monitor::{
    gap_eval, itbda_beta_update, lyapunov_monitor, lyapunov_value, pdhg_condition, validate_stepsizes, Gap,
    LyapunovCheck, StepsizeCase, StepsizeVerdict,
};
pub use run::{run_ahpd, run_atbda, run_itbda, run_pdhg, run_spida, run_tbda, solve};
pub use steps::{ahpd_step, pdhg_step, spida_step, tbda_step};

use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use crate::linops::LinearMap;
use crate::proxcore::ProxFn;
use nalgebra::DVector;
use std::fmt;
use std::time::Duration;

/// A known saddle point `(x̂, ŷ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Saddle {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// `min_x max_y f(x) + ⟨Ax, y⟩ − g(y)` with the three kernels of the
/// TBDA steps: `phi` for the dual prediction, `psi` for the primal step and
/// `phi_hat` for the dual correction.
#[derive(Debug, Clone)]
pub struct SaddleProblem {
    pub f: ProxFn,
    pub g: ProxFn,
    pub a: LinearMap,
    pub phi: Kernel,
    pub psi: Kernel,
    pub phi_hat: Kernel,
    pub saddle: Option<Saddle>,
}

impl SaddleProblem {
    /// Euclidean kernels everywhere.
    pub fn new(f: ProxFn, g: ProxFn, a: LinearMap) -> Result<Self> {
        let (m, n) = a.dims();
        if let Some(d) = f.dim() {
            check_dim(n, d)?;
        }
        if let Some(d) = g.dim() {
            check_dim(m, d)?;
        }
        Ok(SaddleProblem { f, g, a, phi: Kernel::Euclidean, psi: Kernel::Euclidean, phi_hat: Kernel::Euclidean, saddle: None })
    }

    pub fn with_kernels(mut self, phi: Kernel, psi: Kernel, phi_hat: Kernel) -> Result<Self> {
        let (m, n) = self.a.dims();
        for (k, d) in [(&phi, m), (&psi, n), (&phi_hat, m)] {
            if let Some(kd) = k.dim() {
                check_dim(d, kd)?;
            }
        }
        self.phi = phi;
        self.psi = psi;
        self.phi_hat = phi_hat;
        Ok(self)
    }

    pub fn with_saddle(mut self, x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let (m, n) = self.a.dims();
        check_dim(n, x.len())?;
        check_dim(m, y.len())?;
        self.saddle = Some(Saddle { x, y });
        Ok(self)
    }

    /// `(dim y, dim x)`.
    pub fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }

    pub fn euclidean_kernels(&self) -> bool {
        self.phi.is_euclidean() && self.psi.is_euclidean() && self.phi_hat.is_euclidean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Tbda,
    Itbda,
    Atbda,
    Pdhg,
    Ahpd,
    Spida,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::Tbda => "tbda",
            Algorithm::Itbda => "itbda",
            Algorithm::Atbda => "atbda",
            Algorithm::Pdhg => "pdhg",
            Algorithm::Ahpd => "ahpd",
            Algorithm::Spida => "spida",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tbda" => Algorithm::Tbda,
            "itbda" => Algorithm::Itbda,
            "atbda" => Algorithm::Atbda,
            "pdhg" => Algorithm::Pdhg,
            "ahpd" => Algorithm::Ahpd,
            "spida" => Algorithm::Spida,
            other => return Err(Error::InvalidParams(format!("unknown algorithm `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TolKind {
    /// `‖(x, y) − (x̂, ŷ)‖ / ‖(x̂, ŷ)‖`
    KnownSolution,
    /// `‖(x, y)ᵏ⁺¹ − (x, y)ᵏ‖ / ‖(x, y)ᵏ‖`
    SuccessiveChange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub mu: f64,
    pub tau: f64,
    pub sigma: f64,
    pub beta0: f64,
    pub p: f64,
    pub omega: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub tol_kind: TolKind,
    /// Evaluate `𝒫`, `𝒟`, `𝒢` and `a_k` every iteration when a saddle is known.
    pub monitor: bool,
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Tbda,
            gamma: 1.0,
            mu: 1.0,
            tau: 1.0,
            sigma: 1.0,
            beta0: 1.0,
            p: 1.0,
            omega: 1.05,
            rho1: 0.0,
            rho2: 0.0,
            max_iter: 1000,
            tol: 1e-6,
            tol_kind: TolKind::KnownSolution,
            monitor: true,
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    pub fn tbda(gamma: f64, mu: f64, tau: f64, sigma: f64) -> Self {
        SolverConfig { algorithm: Algorithm::Tbda, gamma, mu, tau, sigma, ..Default::default() }
    }

    pub fn spida(gamma: f64, mu: f64, tau: f64) -> Self {
        SolverConfig { algorithm: Algorithm::Spida, gamma, mu, tau, sigma: 0.0, ..Default::default() }
    }

    pub fn pdhg(gamma: f64, mu: f64, sigma: f64) -> Self {
        SolverConfig { algorithm: Algorithm::Pdhg, gamma, mu, tau: gamma, sigma, ..Default::default() }
    }

    pub fn ahpd(gamma: f64, mu: f64) -> Self {
        SolverConfig { algorithm: Algorithm::Ahpd, gamma, mu, tau: gamma, sigma: 0.0, ..Default::default() }
    }

    /// Step (d) uses `γβ_k`; `tau` is kept at `γβ₀` for reporting.
    pub fn itbda(gamma: f64, mu: f64, sigma: f64, beta0: f64, p: f64, rho1: f64) -> Self {
        SolverConfig {
            algorithm: Algorithm::Itbda,
            gamma,
            mu,
            tau: gamma * beta0,
            sigma,
            beta0,
            p,
            rho1,
            ..Default::default()
        }
    }

    /// `μ = ϱ₁/(ω−1)` and `τ = ϱ₂/(ω−1)` are derived, see [`Self::weights`].
    pub fn atbda(gamma: f64, sigma: f64, rho1: f64, rho2: f64, omega: f64) -> Self {
        let mut c = SolverConfig { algorithm: Algorithm::Atbda, gamma, sigma, rho1, rho2, omega, ..Default::default() };
        if omega > 1.0 {
            c.mu = rho1 / (omega - 1.0);
            c.tau = rho2 / (omega - 1.0);
        }
        c
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64, kind: TolKind) -> Self {
        self.tol = tol;
        self.tol_kind = kind;
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn with_monitor(mut self, on: bool) -> Self {
        self.monitor = on;
        self
    }

    pub fn theta(&self) -> f64 {
        self.tau / self.gamma
    }

    /// Effective `(γ, μ, τ)` for the first iteration.
    pub fn weights(&self) -> (f64, f64, f64) {
        match self.algorithm {
            Algorithm::Atbda => (self.gamma, self.rho1 / (self.omega - 1.0), self.rho2 / (self.omega - 1.0)),
            Algorithm::Itbda => (self.gamma, self.mu, self.gamma * self.beta0),
            _ => (self.gamma, self.mu, self.tau),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(self.tol >= 0.0) {
            return bad(format!("tol must be nonnegative, got {}", self.tol));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !pos(self.gamma) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        match self.algorithm {
            Algorithm::Atbda => {
                if !(self.omega > 1.0) || !self.omega.is_finite() {
                    return bad(format!("omega must exceed 1, got {}", self.omega));
                }
                if !pos(self.rho1) || !pos(self.rho2) {
                    return bad(format!("rho1 and rho2 must be positive, got {} and {}", self.rho1, self.rho2));
                }
            }
            Algorithm::Itbda => {
                if !pos(self.mu) || !pos(self.beta0) {
                    return bad(format!("mu and beta0 must be positive, got {} and {}", self.mu, self.beta0));
                }
                if !(self.p > 0.0 && self.p < 2.0) {
                    return bad(format!("p must lie in (0, 2), got {}", self.p));
                }
                if !(self.rho1 >= 0.0) || !self.rho1.is_finite() {
                    return bad(format!("rho1 must be nonnegative, got {}", self.rho1));
                }
            }
            Algorithm::Pdhg | Algorithm::Ahpd => {
                if !pos(self.mu) {
                    return bad(format!("mu must be positive, got {}", self.mu));
                }
                if self.sigma > 1.0 {
                    return bad(format!("PDHG extrapolation must lie in [0, 1], got {}", self.sigma));
                }
            }
            Algorithm::Tbda | Algorithm::Spida => {
                if !pos(self.mu) || !pos(self.tau) {
                    return bad(format!("mu and tau must be positive, got {} and {}", self.mu, self.tau));
                }
            }
        }
        Ok(())
    }
}

/// Iterate after `k` full steps. For `k = 0` the prediction and
/// extrapolation fields hold `y⁰` and `x⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterState {
    pub k: usize,
    pub x: DVector<f64>,
    pub y_tilde: DVector<f64>,
    pub x_bar: DVector<f64>,
    pub y: DVector<f64>,
    /// `β_k` (ITBDA only).
    pub beta: Option<f64>,
}

impl IterState {
    pub fn new(x0: DVector<f64>, y0: DVector<f64>) -> Self {
        IterState { k: 0, x_bar: x0.clone(), y_tilde: y0.clone(), x: x0, y: y0, beta: None }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).chain(self.y_tilde.iter()).chain(self.x_bar.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    InvalidParams,
    /// Iterates became non-finite or grew past `1e100` times their scale.
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::InvalidParams => "invalid_params",
            Status::Diverged => "diverged",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub tol: f64,
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub lyapunov: Option<f64>,
    pub time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub status: Status,
    pub records: Vec<IterRecord>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub final_state: IterState,
    pub ergodic_x: DVector<f64>,
    pub ergodic_y: DVector<f64>,
    /// Gap at the ergodic pair, when a saddle is known and the pair is feasible.
    pub ergodic_gap: Option<Gap>,
    /// `𝒢(𝐱ᴺ, 𝐲ᴺ)·ω^{N−2}` (ATBDA only).
    pub geometric_bound_check: Option<f64>,
    pub initial_lyapunov: Option<f64>,
    /// Step-size condition at the configured weights (Euclidean kernels only).
    pub stepsize_verdict: Option<StepsizeVerdict>,
    pub warnings: Vec<String>,
    pub trajectory: Option<Trajectory>,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn last_tol(&self) -> Option<f64> {
        self.records.last().map(|r| r.tol)
    }
}
