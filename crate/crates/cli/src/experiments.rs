use crate::config::{ExperimentConfig, ExperimentKind, SolverSection};
use crate::output::{emit_csv, SolverRow, TrajectoryRow, VerdictRow};
use anyhow::{bail, Result};
use nalgebra::DVector;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use tbda_core::instances::{make_qp, make_rpca, make_toy_lp, qp_preset, rpca_metrics, rpca_solve_tol, QpInstance, QpPreset, RpcaInstance};
use tbda_core::solvers::{pdhg_condition, solve, validate_stepsizes, Algorithm, SolveReport, SolverConfig, Status, StepsizeVerdict, TolKind};

/// Exit code and the files written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn invalid(out: &mut dyn Write, msg: &str) -> Result<Self> {
        writeln!(out, "invalid parameters: {msg}")?;
        Ok(Outcome { code: 3, files: Vec::new() })
    }
}

const LP_KEYS: &[&str] = &["algorithm", "gamma", "mu", "tau", "sigma"];
const QP_KEYS: &[&str] = &["algorithm", "gamma_scale", "mu_scale", "tau_scale"];
const RPCA_KEYS: &[&str] = &["algorithm", "p1", "p2", "sigma"];
const VALIDATE_KEYS: &[&str] = &["theta", "sigma", "gamma", "mu", "tau", "norm_ata"];

/// Runs every `(algorithm, seed)` cell of the experiment and writes its CSV
/// files. Progress and verdicts go to `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let e = &cfg.experiment;
    if e.algorithms.is_empty() {
        bail!("`algorithms` is empty");
    }
    let allowed = match e.kind {
        ExperimentKind::LpTrajectory => LP_KEYS,
        ExperimentKind::QpBench => QP_KEYS,
        ExperimentKind::RpcaBench => RPCA_KEYS,
        ExperimentKind::ValidateParams => VALIDATE_KEYS,
    };
    for (label, section) in &cfg.solver {
        section.check_keys(label, allowed, e.kind)?;
    }
    if e.lambda.is_some() && e.kind != ExperimentKind::RpcaBench {
        bail!("`lambda` is only used by rpca-bench");
    }
    if e.monitor.is_some() && e.kind != ExperimentKind::QpBench {
        bail!("`monitor` is only used by qp-bench");
    }
    let dir = e.output.clone().unwrap_or_else(|| PathBuf::from("results"));
    match e.kind {
        ExperimentKind::LpTrajectory => lp_trajectory(cfg, &dir, out),
        ExperimentKind::QpBench => qp_bench(cfg, &dir, out),
        ExperimentKind::RpcaBench => rpca_bench(cfg, &dir, out),
        ExperimentKind::ValidateParams => validate_params(cfg, &dir, out),
    }
}

fn algorithm_of(label: &str, section: &SolverSection) -> Result<Algorithm> {
    let name = section.algorithm.as_deref().unwrap_or(label);
    name.parse::<Algorithm>().map_err(|_| anyhow::anyhow!("`{name}` is not an algorithm (set `algorithm` in [solver.{label}])"))
}

fn require_no_seeds_or_sizes(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.experiment.seeds.is_empty() || !cfg.experiment.sizes.is_empty() {
        bail!("{} takes no `seeds` or `sizes`", cfg.experiment.kind.name());
    }
    Ok(())
}

fn tolerance(cfg: &ExperimentConfig, default: f64) -> f64 {
    cfg.experiment.tol.unwrap_or(default)
}

fn max_iter(cfg: &ExperimentConfig, default: usize) -> usize {
    cfg.experiment.max_iter.unwrap_or(default)
}

fn check_run_limits(tol: f64, max_iter: usize) -> std::result::Result<(), String> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(format!("tol must be a nonnegative number, got {tol}"));
    }
    if max_iter == 0 {
        return Err("max_iter must be positive".into());
    }
    Ok(())
}

fn describe(v: &StepsizeVerdict, mu_gamma: f64) -> String {
    format!(
        "μγ = {mu_gamma:.6e} vs threshold {:.6e} (case {:?}): {}",
        v.threshold,
        v.case,
        if v.satisfied { "satisfied" } else { "NOT satisfied" }
    )
}

/// Step-size verdict line for one cell; PDHG-type methods use `μγ > ‖AᵀA‖`.
fn verdict_line(config: &SolverConfig, norm_ata: f64) -> String {
    let (gamma, mu, tau) = config.weights();
    let mg = mu * gamma;
    match config.algorithm {
        Algorithm::Pdhg | Algorithm::Ahpd => format!(
            "μγ = {mg:.6e} vs ‖AᵀA‖ = {norm_ata:.6e}: {}",
            if pdhg_condition(mg, norm_ata) { "satisfied" } else { "NOT satisfied" }
        ),
        _ => {
            let sigma = if config.algorithm == Algorithm::Spida { 0.0 } else { config.sigma };
            match validate_stepsizes(tau / gamma, sigma, mg, norm_ata) {
                Ok(v) => describe(&v, mg),
                Err(err) => format!("no step-size condition applies: {err}"),
            }
        }
    }
}

fn solver_rows<'a>(label: &str, seed: Option<u64>, report: &'a SolveReport) -> impl Iterator<Item = SolverRow> + 'a {
    let label = label.to_string();
    report.records.iter().map(move |r| SolverRow {
        algorithm: label.clone(),
        seed,
        iter: r.k,
        tol: r.tol,
        gap: r.gap,
        primal: r.primal,
        dual: r.dual,
        a_k: r.lyapunov,
        time_ms: r.time_ms,
    })
}

fn failed(status: Status) -> bool {
    matches!(status, Status::MaxIter | Status::Diverged | Status::InvalidParams)
}

#[derive(Default)]
struct Summary {
    cells: usize,
    converged: usize,
    iterations: f64,
    time_s: f64,
    extra: Vec<[f64; 3]>,
}

impl Summary {
    fn add(&mut self, report: &SolveReport) {
        self.cells += 1;
        if report.status == Status::Converged {
            self.converged += 1;
        }
        self.iterations += report.iterations as f64;
        self.time_s += report.elapsed.as_secs_f64();
    }
}

fn print_summary(out: &mut dyn Write, order: &[String], sums: &BTreeMap<String, Summary>, rpca: bool) -> Result<()> {
    writeln!(out, "summary (means over seeds):")?;
    for label in order {
        let s = &sums[label];
        let n = s.cells.max(1) as f64;
        write!(
            out,
            "  {label:<18} iter {:>9.1}  time {:>8.3} s  converged {}/{}",
            s.iterations / n,
            s.time_s / n,
            s.converged,
            s.cells
        )?;
        if rpca && !s.extra.is_empty() {
            let k = s.extra.len() as f64;
            let mean = |i: usize| s.extra.iter().map(|e| e[i]).sum::<f64>() / k;
            write!(out, "  rank {:.1}  nnz {:.1}  Rerr {:.3e}", mean(0), mean(1), mean(2))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn lp_trajectory(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Outcome> {
    require_no_seeds_or_sizes(cfg)?;
    let default = 2.0 * 6f64.sqrt() / 3.0;
    let tol = tolerance(cfg, 1e-6);
    let iters = max_iter(cfg, 1000);
    if let Err(msg) = check_run_limits(tol, iters) {
        return Outcome::invalid(out, &msg);
    }

    let mut cells = Vec::new();
    for label in &cfg.experiment.algorithms {
        let s = cfg.section(label);
        let alg = algorithm_of(label, &s)?;
        let gamma = s.gamma.unwrap_or(default);
        let mu = s.mu.unwrap_or(default);
        let tau = s.tau.unwrap_or(gamma);
        let sigma = s.sigma.unwrap_or(1.0);
        let config = match alg {
            Algorithm::Tbda => SolverConfig::tbda(gamma, mu, tau, sigma),
            Algorithm::Pdhg => SolverConfig::pdhg(gamma, mu, sigma),
            Algorithm::Spida => SolverConfig::spida(gamma, mu, tau),
            Algorithm::Ahpd => SolverConfig::ahpd(gamma, mu),
            other => bail!("{other} is not part of lp-trajectory"),
        };
        let unused: &[(&str, bool)] = match alg {
            Algorithm::Pdhg => &[("tau", s.tau.is_some())],
            Algorithm::Spida => &[("sigma", s.sigma.is_some())],
            Algorithm::Ahpd => &[("tau", s.tau.is_some()), ("sigma", s.sigma.is_some())],
            _ => &[],
        };
        if let Some((k, _)) = unused.iter().find(|(_, set)| *set) {
            bail!("[solver.{label}]: key `{k}` is not used by {alg}");
        }
        let config = config.with_max_iter(iters).with_tol(tol, TolKind::KnownSolution).with_trajectory();
        if let Err(err) = config.validate() {
            return Outcome::invalid(out, &format!("{label}: {err}"));
        }
        cells.push((label.clone(), config));
    }

    let problem = make_toy_lp();
    let norm_ata = problem.a.norm().powi(2);
    let x0 = DVector::zeros(2);
    let y0 = DVector::zeros(1);
    let mut rows = Vec::new();
    let mut files = Vec::new();
    let mut code = 0;
    for (label, config) in &cells {
        writeln!(out, "[{label}] {}", verdict_line(config, norm_ata))?;
        let report = solve(&problem, config, &x0, &y0)?;
        writeln!(out, "[{label}] {} after {} iterations", report.status, report.iterations)?;
        if failed(report.status) {
            code = 2;
        }
        rows.extend(solver_rows(label, None, &report));
        let traj = report.trajectory.as_ref().expect("trajectory recording was requested");
        let predicted = !matches!(config.algorithm, Algorithm::Pdhg | Algorithm::Ahpd);
        let points: Vec<TrajectoryRow> = (0..traj.x.len())
            .map(|k| TrajectoryRow {
                k,
                x1: traj.x[k][0],
                x2: traj.x[k][1],
                y_tilde: match k {
                    0 => predicted.then(|| traj.y[0][0]),
                    _ => predicted.then(|| traj.y_tilde[k - 1][0]),
                },
                y: traj.y[k][0],
            })
            .collect();
        let path = dir.join(format!("lp-trajectory_{}.csv", file_safe(label)));
        emit_csv(&points, &path)?;
        files.push(path);
    }
    let path = dir.join("lp-trajectory.csv");
    emit_csv(&rows, &path)?;
    files.insert(0, path);
    Ok(Outcome { code, files })
}

fn file_safe(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn sizes<const N: usize>(cfg: &ExperimentConfig) -> Result<Vec<[usize; N]>> {
    let e = &cfg.experiment;
    if e.sizes.is_empty() {
        bail!("`sizes` is empty");
    }
    if e.seeds.is_empty() {
        bail!("`seeds` is empty");
    }
    e.sizes
        .iter()
        .map(|s| <[usize; N]>::try_from(s.as_slice()).map_err(|_| anyhow::anyhow!("each size of {} needs {N} entries, got {s:?}", e.kind.name())))
        .collect()
}

fn qp_bench(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let shapes = sizes::<2>(cfg)?;
    let tol = tolerance(cfg, 1e-6);
    let iters = max_iter(cfg, 3000);
    let monitor = cfg.experiment.monitor.unwrap_or(false);
    if let Err(msg) = check_run_limits(tol, iters) {
        return Outcome::invalid(out, &msg);
    }

    let mut presets = Vec::new();
    for label in &cfg.experiment.algorithms {
        let s = cfg.section(label);
        let name = s.algorithm.as_deref().unwrap_or(label);
        let preset: QpPreset = name.parse().map_err(|_| {
            let known: Vec<&str> = QpPreset::ALL.iter().map(|p| p.name()).collect();
            anyhow::anyhow!("`{name}` is not a QP configuration (one of {})", known.join(", "))
        })?;
        let (g, m, t) = preset.scales();
        let scales = (s.gamma_scale.unwrap_or(g), s.mu_scale.unwrap_or(m), s.tau_scale.unwrap_or(t));
        if preset == QpPreset::Pdhg && s.tau_scale.is_some() {
            bail!("[solver.{label}]: key `tau_scale` is not used by pdhg");
        }
        if ![scales.0, scales.1, scales.2].iter().all(|c| *c > 0.0 && c.is_finite()) {
            return Outcome::invalid(out, &format!("{label}: scale factors must be positive, got {scales:?}"));
        }
        presets.push((label.clone(), preset, scales));
    }

    let mut rows = Vec::new();
    let mut sums: BTreeMap<String, Summary> = BTreeMap::new();
    let mut code = 0;
    for [m, n] in shapes {
        for &seed in &cfg.experiment.seeds {
            let inst: QpInstance = make_qp(m, n, seed)?;
            for (label, preset, scales) in &presets {
                let (problem, kernel, config) = match qp_preset(&inst, *preset, *scales) {
                    Ok(v) => v,
                    Err(err) => return Outcome::invalid(out, &format!("{label}: {err}")),
                };
                let config = config.with_max_iter(iters).with_tol(tol, TolKind::KnownSolution).with_monitor(monitor);
                let norm_ata = kernel.lambda_bar * inst.a_norm * inst.a_norm;
                let mut line = verdict_line(&config, norm_ata);
                if config.algorithm == Algorithm::Itbda {
                    let mg = config.mu * config.gamma;
                    line = match validate_stepsizes(config.beta0, config.sigma, mg, norm_ata) {
                        Ok(v) => describe(&v, mg),
                        Err(err) => format!("no step-size condition applies: {err}"),
                    };
                }
                writeln!(out, "[{label} {m}x{n} seed {seed}] {line}")?;
                let report = solve(&problem, &config, &DVector::zeros(n), &DVector::zeros(m))?;
                writeln!(
                    out,
                    "[{label} {m}x{n} seed {seed}] {} after {} iterations, tol {:.3e}, {:.3} s",
                    report.status,
                    report.iterations,
                    report.last_tol().unwrap_or(f64::NAN),
                    report.elapsed.as_secs_f64()
                )?;
                if failed(report.status) {
                    code = 2;
                }
                sums.entry(label.clone()).or_default().add(&report);
                rows.extend(solver_rows(label, Some(seed), &report));
            }
        }
    }
    print_summary(out, &cfg.experiment.algorithms, &sums, false)?;
    let path = dir.join("qp-bench.csv");
    emit_csv(&rows, &path)?;
    Ok(Outcome { code, files: vec![path] })
}

fn rpca_bench(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let shapes = sizes::<3>(cfg)?;
    let tol = tolerance(cfg, 1e-5);
    let iters = max_iter(cfg, 3000);
    if let Err(msg) = check_run_limits(tol, iters) {
        return Outcome::invalid(out, &msg);
    }
    if let Some(l) = cfg.experiment.lambda {
        if !(l > 0.0) || !l.is_finite() {
            return Outcome::invalid(out, &format!("lambda must be positive, got {l}"));
        }
    }

    let mut cells = Vec::new();
    for label in &cfg.experiment.algorithms {
        let s = cfg.section(label);
        let alg = algorithm_of(label, &s)?;
        if !matches!(alg, Algorithm::Tbda | Algorithm::Pdhg | Algorithm::Spida | Algorithm::Ahpd) {
            bail!("{alg} is not part of rpca-bench");
        }
        if matches!(alg, Algorithm::Spida | Algorithm::Ahpd) && s.sigma.is_some() {
            bail!("[solver.{label}]: key `sigma` is not used by {alg}");
        }
        let (p1, p2, sigma) = (s.p1.unwrap_or(1.0), s.p2.unwrap_or(1.0), s.sigma.unwrap_or(1.0));
        if !(p1 > 0.0 && p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
            return Outcome::invalid(out, &format!("{label}: p1 and p2 must be positive, got ({p1}, {p2})"));
        }
        let probe = match alg {
            Algorithm::Tbda => SolverConfig::tbda(p1, p2, p1, sigma),
            Algorithm::Pdhg => SolverConfig::pdhg(p1, p2, sigma),
            Algorithm::Spida => SolverConfig::spida(p1, p2, p1),
            _ => SolverConfig::ahpd(p1, p2),
        };
        if let Err(err) = probe.validate() {
            return Outcome::invalid(out, &format!("{label}: {err}"));
        }
        cells.push((label.clone(), alg, p1, p2, sigma, probe));
    }

    let mut rows = Vec::new();
    let mut sums: BTreeMap<String, Summary> = BTreeMap::new();
    let mut code = 0;
    for [m, n, r] in shapes {
        for &seed in &cfg.experiment.seeds {
            let mut inst: RpcaInstance = make_rpca(m, n, r, seed)?;
            if let Some(l) = cfg.experiment.lambda {
                inst = inst.with_lambda(l)?;
            }
            for (label, alg, p1, p2, sigma, probe) in &cells {
                // ‖[I I]‖² = 2 and γ, μ are p₁, p₂ times ‖A‖
                let scaled = SolverConfig { gamma: p1 * 2f64.sqrt(), mu: p2 * 2f64.sqrt(), tau: p1 * 2f64.sqrt(), ..probe.clone() };
                writeln!(out, "[{label} {m}x{n} r{r} seed {seed}] {}", verdict_line(&scaled, 2.0))?;
                let res = rpca_solve_tol(&inst, *alg, *p1, *p2, *sigma, iters, tol)?;
                let met = rpca_metrics(&res.x_hat, &res.z_hat, &inst.x_star, &inst.z_star)?;
                writeln!(
                    out,
                    "[{label} {m}x{n} r{r} seed {seed}] {} after {} iterations, rank {}, nnz {}, Rerr {:.3e}, {:.3} s",
                    res.report.status,
                    res.report.iterations,
                    met.rank,
                    met.nnz,
                    met.rerr,
                    res.report.elapsed.as_secs_f64()
                )?;
                if failed(res.report.status) {
                    code = 2;
                }
                let s = sums.entry(label.clone()).or_default();
                s.add(&res.report);
                s.extra.push([met.rank as f64, met.nnz as f64, met.rerr]);
                rows.extend(solver_rows(label, Some(seed), &res.report));
            }
        }
    }
    print_summary(out, &cfg.experiment.algorithms, &sums, true)?;
    let path = dir.join("rpca-bench.csv");
    emit_csv(&rows, &path)?;
    Ok(Outcome { code, files: vec![path] })
}

fn validate_params(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Outcome> {
    require_no_seeds_or_sizes(cfg)?;
    if cfg.experiment.max_iter.is_some() || cfg.experiment.tol.is_some() {
        bail!("validate-params takes no `max_iter` or `tol`");
    }
    let mut rows = Vec::new();
    for label in &cfg.experiment.algorithms {
        let s = cfg.section(label);
        let theta = match (s.theta, s.tau, s.gamma) {
            (Some(t), None, _) => t,
            (None, Some(tau), Some(g)) => tau / g,
            (None, Some(_), None) => bail!("[solver.{label}]: `tau` needs `gamma` to define θ"),
            (Some(_), Some(_), _) => bail!("[solver.{label}]: give either `theta` or `tau`, not both"),
            (None, None, _) => bail!("[solver.{label}]: `theta` is required"),
        };
        let sigma = s.sigma.unwrap_or(1.0);
        let norm_ata = s.norm_ata.unwrap_or(1.0);
        let mu_gamma = match (s.mu, s.gamma) {
            (Some(m), Some(g)) => Some(m * g),
            (None, None) => None,
            _ => bail!("[solver.{label}]: give both `mu` and `gamma` or neither"),
        };
        let v = match validate_stepsizes(theta, sigma, mu_gamma.unwrap_or(0.0), norm_ata) {
            Ok(v) => v,
            Err(err) => return Outcome::invalid(out, &format!("{label}: {err}")),
        };
        match mu_gamma {
            Some(mg) => writeln!(out, "[{label}] θ = {theta}, σ = {sigma}: {}", describe(&v, mg))?,
            None => writeln!(
                out,
                "[{label}] θ = {theta}, σ = {sigma}: threshold {:.6e} = {:.6}·‖AᵀA‖ (case {:?})",
                v.threshold,
                v.threshold / norm_ata,
                v.case
            )?,
        }
        rows.push(VerdictRow {
            label: label.clone(),
            theta,
            sigma,
            norm_ata,
            threshold: v.threshold,
            case: format!("{:?}", v.case),
            mu_gamma,
            satisfied: mu_gamma.map(|_| v.satisfied),
        });
    }
    let path = dir.join("validate-params.csv");
    emit_csv(&rows, &path)?;
    Ok(Outcome { code: 0, files: vec![path] })
}
