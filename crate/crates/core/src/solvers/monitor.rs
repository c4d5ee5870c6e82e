use super::{Algorithm, IterState, SaddleProblem, SolverConfig};
use crate::error::{Error, Result};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub primal: f64,
    pub dual: f64,
    pub total: f64,
}

/// `𝒫(x) = f(x) − f(x̂) + ⟨x − x̂, Aᵀŷ⟩`, `𝒟(y) = g(y) − g(ŷ) − ⟨y − ŷ, Ax̂⟩`.
pub fn gap_eval(problem: &SaddleProblem, x: &DVector<f64>, y: &DVector<f64>) -> Result<Gap> {
    let s = problem.saddle.as_ref().ok_or_else(|| Error::Unsupported("gap needs a known saddle point".into()))?;
    let primal = primal_gap(problem, x)?;
    if !problem.g.is_feasible(y) {
        return Err(Error::Infeasible("dual point outside the domain of g".into()));
    }
    let ax = problem.a.apply(&s.x)?;
    let dual = problem.g.value(y)? - problem.g.value(&s.y)? - (y - &s.y).dot(&ax);
    Ok(Gap { primal, dual, total: primal + dual })
}

pub(crate) fn primal_gap(problem: &SaddleProblem, x: &DVector<f64>) -> Result<f64> {
    let s = problem.saddle.as_ref().ok_or_else(|| Error::Unsupported("gap needs a known saddle point".into()))?;
    if !problem.f.is_feasible(x) {
        return Err(Error::Infeasible("primal point outside the domain of f".into()));
    }
    let aty = problem.a.adjoint(&s.y)?;
    Ok(problem.f.value(x)? - problem.f.value(&s.x)? + (x - &s.x).dot(&aty))
}

/// Weights `(τ, μ, σ)` of `a_k = τ𝓑_φ̂(ŷ, yᵏ) + μ𝓑_ψ(x̂, xᵏ) + σ𝒫(xᵏ)` at a state.
pub(crate) fn lyapunov_weights(config: &SolverConfig, state: &IterState) -> (f64, f64, f64) {
    let (gamma, mu, tau) = config.weights();
    match config.algorithm {
        Algorithm::Itbda => (gamma * state.beta.unwrap_or(config.beta0), mu, config.sigma),
        Algorithm::Pdhg | Algorithm::Ahpd => (gamma, mu, 0.0),
        _ => (tau, mu, config.sigma),
    }
}

/// `a_k` at one state. PDHG-type runs use `γ𝓑_φ(ŷ, y) + μ𝓑_ψ(x̂, x)`.
pub fn lyapunov_value(problem: &SaddleProblem, state: &IterState, config: &SolverConfig) -> Result<f64> {
    let s = problem.saddle.as_ref().ok_or_else(|| Error::Unsupported("Lyapunov value needs a known saddle point".into()))?;
    let (tau, mu, sigma) = lyapunov_weights(config, state);
    let dual_kernel = match config.algorithm {
        Algorithm::Pdhg | Algorithm::Ahpd | Algorithm::Spida => &problem.phi,
        _ => &problem.phi_hat,
    };
    let mut a = tau * dual_kernel.bregman_distance(&s.y, &state.y)? + mu * problem.psi.bregman_distance(&s.x, &state.x)?;
    if sigma != 0.0 {
        a += sigma * primal_gap(problem, &state.x)?;
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovCheck {
    pub a_k: f64,
    pub a_next: f64,
    pub decreased: bool,
}

/// Compares `a_k` and `a_{k+1}`; `decreased` allows `1e-10·max(a_k, 1)` slack.
pub fn lyapunov_monitor(problem: &SaddleProblem, state_k: &IterState, state_next: &IterState, config: &SolverConfig) -> Result<LyapunovCheck> {
    let a_k = lyapunov_value(problem, state_k, config)?;
    let a_next = lyapunov_value(problem, state_next, config)?;
    let decreased = a_next <= a_k + 1e-10 * a_k.abs().max(1.0);
    Ok(LyapunovCheck { a_k, a_next, decreased })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepsizeCase {
    /// `½ < θ < 1`
    I,
    /// `1 ≤ θ < 2`
    II,
    /// `θ ≥ 2`
    III,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeVerdict {
    pub satisfied: bool,
    pub threshold: f64,
    pub case: StepsizeCase,
}

/// Sufficient condition `μγ > threshold(θ, σ)·‖AᵀA‖` for Euclidean kernels.
pub fn validate_stepsizes(theta: f64, sigma: f64, mu_gamma: f64, norm_ata: f64) -> Result<StepsizeVerdict> {
    if !(theta > 0.5) || !theta.is_finite() {
        return Err(Error::InvalidParams(format!("step-size condition needs θ > 1/2, got {theta}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParams(format!("σ must be nonnegative, got {sigma}")));
    }
    if !(norm_ata > 0.0) || !norm_ata.is_finite() {
        return Err(Error::InvalidParams(format!("‖AᵀA‖ must be positive, got {norm_ata}")));
    }
    let s2 = (1.0 + sigma) * (1.0 + sigma);
    let (factor, case) = if theta < 1.0 {
        (s2 / ((1.0 + 2.0 * sigma) * (2.0 * theta - 1.0)), StepsizeCase::I)
    } else if theta < 2.0 {
        (2.0 * s2 / ((theta + 1.0) * (1.0 + 2.0 * sigma)), StepsizeCase::II)
    } else {
        (2.0 * s2 / (3.0 + 6.0 * sigma), StepsizeCase::III)
    };
    let threshold = factor * norm_ata;
    Ok(StepsizeVerdict { satisfied: mu_gamma > threshold, threshold, case })
}

/// PDHG's condition `‖AᵀA‖ < μγ`.
pub fn pdhg_condition(mu_gamma: f64, norm_ata: f64) -> bool {
    norm_ata < mu_gamma
}

/// `β_{k+1} = min(μβ_k/(μ + ϱ₁), 1/p)`.
pub fn itbda_beta_update(beta: f64, mu: f64, rho1: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::InvalidParams(format!("p must lie in (0, 2), got {p}")));
    }
    if !(beta > 0.0) || !(mu > 0.0) || !(rho1 >= 0.0) {
        return Err(Error::InvalidParams(format!("need β > 0, μ > 0, ϱ₁ ≥ 0, got {beta}, {mu}, {rho1}")));
    }
    Ok((mu * beta / (mu + rho1)).min(1.0 / p))
}
