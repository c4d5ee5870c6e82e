use super::{Algorithm, IterState, SaddleProblem, SolverConfig};
use crate::error::Result;
use crate::proxcore::ProxOracle;
use nalgebra::DVector;

/// Oracles for steps (a), (b) and (d), built once per run.
pub(crate) struct TbdaOracles<'p> {
    pub predict: ProxOracle<'p>,
    pub primal: ProxOracle<'p>,
    pub correct: ProxOracle<'p>,
}

impl<'p> TbdaOracles<'p> {
    pub fn new(problem: &'p SaddleProblem, gamma: f64, mu: f64, tau: f64) -> Result<Self> {
        Ok(TbdaOracles {
            predict: ProxOracle::new(&problem.g, &problem.phi, gamma)?,
            primal: ProxOracle::new(&problem.f, &problem.psi, mu)?,
            correct: ProxOracle::new(&problem.g, &problem.phi_hat, tau)?,
        })
    }
}

pub(crate) fn extrapolate(x: &DVector<f64>, x_prev: &DVector<f64>, sigma: f64) -> DVector<f64> {
    if sigma == 0.0 {
        x.clone()
    } else {
        x + (x - x_prev) * sigma
    }
}

pub(crate) fn tbda_step_with(problem: &SaddleProblem, o: &TbdaOracles<'_>, sigma: f64, s: &IterState) -> Result<IterState> {
    tbda_core(problem, &o.predict, &o.primal, &o.correct, sigma, s)
}

pub(crate) fn tbda_core(
    problem: &SaddleProblem,
    predict: &ProxOracle<'_>,
    primal: &ProxOracle<'_>,
    correct: &ProxOracle<'_>,
    sigma: f64,
    s: &IterState,
) -> Result<IterState> {
    let a = &problem.a;
    let y_tilde = predict.prox(&s.y, &-a.apply(&s.x)?)?;
    let x = primal.prox(&s.x, &a.adjoint(&y_tilde)?)?;
    let x_bar = extrapolate(&x, &s.x, sigma);
    let y = correct.prox(&s.y, &-a.apply(&x_bar)?)?;
    Ok(IterState { k: s.k + 1, x, y_tilde, x_bar, y, beta: s.beta })
}

/// One pass of steps (a)–(d). For ITBDA the correction weight is `γβ_k`
/// with `β_k` read from the state (or `β₀` when unset); ATBDA uses its
/// derived `μ` and `τ`.
pub fn tbda_step(problem: &SaddleProblem, config: &SolverConfig, state: &IterState) -> Result<IterState> {
    config.validate()?;
    let (gamma, mu, mut tau) = config.weights();
    if config.algorithm == Algorithm::Itbda {
        tau = gamma * state.beta.unwrap_or(config.beta0);
    }
    let o = TbdaOracles::new(problem, gamma, mu, tau)?;
    tbda_step_with(problem, &o, config.sigma, state)
}

pub(crate) struct PairOracles<'p> {
    pub primal: ProxOracle<'p>,
    pub dual: ProxOracle<'p>,
}

impl<'p> PairOracles<'p> {
    pub fn pdhg(problem: &'p SaddleProblem, gamma: f64, mu: f64) -> Result<Self> {
        Ok(PairOracles {
            primal: ProxOracle::new(&problem.f, &problem.psi, mu)?,
            dual: ProxOracle::new(&problem.g, &problem.phi, gamma)?,
        })
    }
}

pub(crate) fn pdhg_step_with(problem: &SaddleProblem, o: &PairOracles<'_>, sigma: f64, s: &IterState) -> Result<IterState> {
    let a = &problem.a;
    let x = o.primal.prox(&s.x, &a.adjoint(&s.y)?)?;
    let x_bar = extrapolate(&x, &s.x, sigma);
    let y = o.dual.prox(&s.y, &-a.apply(&x_bar)?)?;
    Ok(IterState { k: s.k + 1, x, y_tilde: y.clone(), x_bar, y, beta: None })
}

pub(crate) fn ahpd_step_with(problem: &SaddleProblem, o: &PairOracles<'_>, s: &IterState) -> Result<IterState> {
    let a = &problem.a;
    let x = o.primal.prox(&s.x, &a.adjoint(&s.y)?)?;
    let y = o.dual.prox(&s.y, &-a.apply(&x)?)?;
    Ok(IterState { k: s.k + 1, x_bar: x.clone(), x, y_tilde: y.clone(), y, beta: None })
}

pub(crate) struct SpidaOracles<'p> {
    pub predict: ProxOracle<'p>,
    pub primal: ProxOracle<'p>,
    pub correct: ProxOracle<'p>,
}

impl<'p> SpidaOracles<'p> {
    pub fn new(problem: &'p SaddleProblem, gamma: f64, mu: f64, tau: f64) -> Result<Self> {
        Ok(SpidaOracles {
            predict: ProxOracle::new(&problem.g, &problem.phi, gamma)?,
            primal: ProxOracle::new(&problem.f, &problem.psi, mu)?,
            correct: ProxOracle::new(&problem.g, &problem.phi, tau)?,
        })
    }
}

pub(crate) fn spida_step_with(problem: &SaddleProblem, o: &SpidaOracles<'_>, s: &IterState) -> Result<IterState> {
    let a = &problem.a;
    let y_tilde = o.predict.prox(&s.y, &-a.apply(&s.x)?)?;
    let x = o.primal.prox(&s.x, &a.adjoint(&y_tilde)?)?;
    let y = o.correct.prox(&s.y, &-a.apply(&x)?)?;
    Ok(IterState { k: s.k + 1, x_bar: x.clone(), x, y_tilde, y, beta: None })
}

/// `x⁺ = prox_f(x; Aᵀy)`, `x̃ = x⁺ + σ(x⁺ − x)`, `y⁺ = prox_g(y; −Ax̃)`.
/// The dual step uses `γ` and the kernel `phi`.
pub fn pdhg_step(problem: &SaddleProblem, config: &SolverConfig, state: &IterState) -> Result<IterState> {
    config.validate()?;
    let o = PairOracles::pdhg(problem, config.gamma, config.mu)?;
    pdhg_step_with(problem, &o, config.sigma, state)
}

/// Arrow–Hurwicz: PDHG without extrapolation.
pub fn ahpd_step(problem: &SaddleProblem, config: &SolverConfig, state: &IterState) -> Result<IterState> {
    config.validate()?;
    let o = PairOracles::pdhg(problem, config.gamma, config.mu)?;
    ahpd_step_with(problem, &o, state)
}

/// Symmetric dual prediction/correction with one kernel for both dual steps.
pub fn spida_step(problem: &SaddleProblem, config: &SolverConfig, state: &IterState) -> Result<IterState> {
    config.validate()?;
    let o = SpidaOracles::new(problem, config.gamma, config.mu, config.tau)?;
    spida_step_with(problem, &o, state)
}
