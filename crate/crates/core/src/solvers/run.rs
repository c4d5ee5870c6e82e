use super::ergodic::{ErgodicAccumulator, Trajectory};
use super::monitor::{gap_eval, itbda_beta_update, lyapunov_value, validate_stepsizes, Gap};
use super::steps::{ahpd_step_with, tbda_core, pdhg_step_with, spida_step_with, tbda_step_with, PairOracles, SpidaOracles, TbdaOracles};
use super::{Algorithm, IterRecord, IterState, SaddleProblem, SolveReport, SolverConfig, Status, TolKind};
use crate::error::{check_dim, Error, Result};
use crate::instances::stopping_tol;
use crate::proxcore::ProxOracle;
use nalgebra::DVector;
use std::time::Instant;

/// Runs the configured algorithm from `(x0, y0)`.
pub fn solve(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    match config.algorithm {
        Algorithm::Tbda => run_tbda(problem, config, x0, y0),
        Algorithm::Itbda => run_itbda(problem, config, x0, y0),
        Algorithm::Atbda => run_atbda(problem, config, x0, y0),
        Algorithm::Pdhg => run_pdhg(problem, config, x0, y0),
        Algorithm::Ahpd => run_ahpd(problem, config, x0, y0),
        Algorithm::Spida => run_spida(problem, config, x0, y0),
    }
}

fn expect(config: &SolverConfig, algs: &[Algorithm]) -> Result<()> {
    if algs.contains(&config.algorithm) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("config is for {}, not {}", config.algorithm, algs[0])))
    }
}

pub fn run_tbda(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Tbda])?;
    config.validate()?;
    let o = TbdaOracles::new(problem, config.gamma, config.mu, config.tau)?;
    let acc = ErgodicAccumulator::uniform(config.sigma, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| tbda_step_with(problem, &o, config.sigma, s))
}

pub fn run_itbda(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Itbda])?;
    config.validate()?;
    let predict = ProxOracle::new(&problem.g, &problem.phi, config.gamma)?;
    let primal = ProxOracle::new(&problem.f, &problem.psi, config.mu)?;
    let acc = ErgodicAccumulator::beta_weighted(config.sigma, config.beta0, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| {
        let beta = s.beta.unwrap_or(config.beta0);
        let correct = ProxOracle::new(&problem.g, &problem.phi_hat, config.gamma * beta)?;
        let mut next = tbda_core(problem, &predict, &primal, &correct, config.sigma, s)?;
        next.beta = Some(itbda_beta_update(beta, config.mu, config.rho1, config.p)?);
        Ok(next)
    })
}

pub fn run_atbda(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Atbda])?;
    config.validate()?;
    let (gamma, mu, tau) = config.weights();
    let o = TbdaOracles::new(problem, gamma, mu, tau)?;
    let acc = ErgodicAccumulator::geometric(config.sigma, config.omega, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| tbda_step_with(problem, &o, config.sigma, s))
}

pub fn run_pdhg(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Pdhg])?;
    config.validate()?;
    let o = PairOracles::pdhg(problem, config.gamma, config.mu)?;
    let acc = ErgodicAccumulator::uniform(0.0, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| pdhg_step_with(problem, &o, config.sigma, s))
}

pub fn run_ahpd(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Ahpd])?;
    config.validate()?;
    let o = PairOracles::pdhg(problem, config.gamma, config.mu)?;
    let acc = ErgodicAccumulator::uniform(0.0, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| ahpd_step_with(problem, &o, s))
}

pub fn run_spida(problem: &SaddleProblem, config: &SolverConfig, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolveReport> {
    expect(config, &[Algorithm::Spida])?;
    config.validate()?;
    let o = SpidaOracles::new(problem, config.gamma, config.mu, config.tau)?;
    let acc = ErgodicAccumulator::uniform(0.0, x0, y0.len());
    drive(problem, config, x0, y0, acc, |s| spida_step_with(problem, &o, s))
}

fn stacked_norm(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.norm_squared() + y.norm_squared()).sqrt()
}

fn current_tol(problem: &SaddleProblem, kind: TolKind, prev: &IterState, next: &IterState) -> Result<f64> {
    let (reference_x, reference_y) = match kind {
        TolKind::KnownSolution => {
            let s = problem
                .saddle
                .as_ref()
                .ok_or_else(|| Error::Unsupported("KnownSolution tolerance needs a known saddle point".into()))?;
            (&s.x, &s.y)
        }
        TolKind::SuccessiveChange => (&prev.x, &prev.y),
    };
    match stopping_tol(&[&next.x, &next.y], &[reference_x, reference_y]) {
        Err(Error::ZeroReference) => {
            Ok(stacked_norm(&(&next.x - reference_x), &(&next.y - reference_y)))
        }
        other => other,
    }
}

fn drive<F>(
    problem: &SaddleProblem,
    config: &SolverConfig,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    mut acc: ErgodicAccumulator,
    mut step: F,
) -> Result<SolveReport>
where
    F: FnMut(&IterState) -> Result<IterState>,
{
    let (m, n) = problem.dims();
    check_dim(n, x0.len())?;
    check_dim(m, y0.len())?;
    let start = Instant::now();
    let mut warnings = Vec::new();

    let stepsize_verdict = stepsize_flag(problem, config, &mut warnings);

    let mut state = IterState::new(x0.clone(), y0.clone());
    if config.algorithm == Algorithm::Itbda {
        state.beta = Some(config.beta0);
    }
    let monitor = config.monitor && problem.saddle.is_some();
    let initial_lyapunov = if monitor { lyapunov_value(problem, &state, config).ok() } else { None };

    let mut trajectory = config.record_trajectory.then(|| Trajectory {
        x: vec![x0.clone()],
        y: vec![y0.clone()],
        beta: state.beta.into_iter().collect(),
        ..Default::default()
    });

    let scale = stacked_norm(x0, y0)
        .max(problem.saddle.as_ref().map_or(0.0, |s| stacked_norm(&s.x, &s.y)))
        .max(1.0);
    let mut records = Vec::new();
    let mut status = Status::MaxIter;

    for _ in 0..config.max_iter {
        let next = step(&state)?;
        if !next.is_finite() || stacked_norm(&next.x, &next.y) > 1e100 * scale {
            status = Status::Diverged;
            warnings.push(format!("iterates diverged at k = {}", next.k));
            break;
        }
        let tol = current_tol(problem, config.tol_kind, &state, &next)?;
        acc.push(&next.x, &next.x_bar, &next.y_tilde, state.beta.unwrap_or(1.0));

        let (mut primal, mut dual, mut gap, mut lyapunov) = (None, None, None, None);
        if monitor {
            if let Ok(g) = gap_eval(problem, &next.x, &next.y) {
                primal = Some(g.primal);
                dual = Some(g.dual);
                gap = Some(g.total);
            }
            lyapunov = lyapunov_value(problem, &next, config).ok();
        }
        records.push(IterRecord {
            k: next.k,
            tol,
            primal,
            dual,
            gap,
            lyapunov,
            time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if let Some(t) = trajectory.as_mut() {
            t.x.push(next.x.clone());
            t.y.push(next.y.clone());
            t.y_tilde.push(next.y_tilde.clone());
            t.x_bar.push(next.x_bar.clone());
            if let Some(b) = next.beta {
                t.beta.push(b);
            }
        }
        state = next;
        if tol <= config.tol {
            status = Status::Converged;
            break;
        }
    }

    let (ergodic_x, ergodic_y) = if acc.count() > 0 { acc.average()? } else { (x0.clone(), y0.clone()) };
    let ergodic_gap: Option<Gap> = if problem.saddle.is_some() && acc.count() > 0 {
        match gap_eval(problem, &ergodic_x, &ergodic_y) {
            Ok(g) => Some(g),
            Err(e) => {
                warnings.push(format!("ergodic gap not evaluated: {e}"));
                None
            }
        }
    } else {
        None
    };
    let geometric_bound_check = match (config.algorithm, ergodic_gap) {
        (Algorithm::Atbda, Some(g)) => Some(g.total * config.omega.powf(acc.count() as f64 - 2.0)),
        _ => None,
    };

    Ok(SolveReport {
        algorithm: config.algorithm,
        iterations: records.len(),
        status,
        records,
        x: state.x.clone(),
        y: state.y.clone(),
        final_state: state,
        ergodic_x,
        ergodic_y,
        ergodic_gap,
        geometric_bound_check,
        initial_lyapunov,
        stepsize_verdict,
        warnings,
        trajectory,
        elapsed: start.elapsed(),
    })
}

/// Checks the Euclidean step-size condition and records a warning when it
/// fails. Non-Euclidean kernels are left unchecked.
fn stepsize_flag(problem: &SaddleProblem, config: &SolverConfig, warnings: &mut Vec<String>) -> Option<super::StepsizeVerdict> {
    if !problem.euclidean_kernels() {
        return None;
    }
    let norm = problem.a.norm();
    let norm_ata = norm * norm;
    if norm_ata == 0.0 {
        return None;
    }
    let (gamma, mu, tau) = config.weights();
    match config.algorithm {
        Algorithm::Pdhg | Algorithm::Ahpd => {
            if !super::pdhg_condition(mu * gamma, norm_ata) {
                warnings.push(format!("μγ = {} does not exceed ‖AᵀA‖ = {norm_ata}", mu * gamma));
            }
            None
        }
        _ => match validate_stepsizes(tau / gamma, config.sigma, mu * gamma, norm_ata) {
            Ok(v) => {
                if !v.satisfied {
                    warnings.push(format!("μγ = {} does not exceed the step-size threshold {}", mu * gamma, v.threshold));
                }
                Some(v)
            }
            Err(e) => {
                warnings.push(format!("step-size condition not applicable: {e}"));
                None
            }
        },
    }
}
