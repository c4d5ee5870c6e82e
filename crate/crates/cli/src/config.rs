use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LpTrajectory,
    QpBench,
    RpcaBench,
    ValidateParams,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::LpTrajectory => "lp-trajectory",
            ExperimentKind::QpBench => "qp-bench",
            ExperimentKind::RpcaBench => "rpca-bench",
            ExperimentKind::ValidateParams => "validate-params",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub algorithms: Vec<String>,
    /// `[m, n]` for QP, `[m, n, r]` for RPCA.
    #[serde(default)]
    pub sizes: Vec<Vec<usize>>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    /// RPCA trade-off weight; defaults to `1/√max(m, n)`.
    pub lambda: Option<f64>,
    /// Per-iteration gap and Lyapunov columns (QP only; costs two extra
    /// products with `Q` per iteration).
    pub monitor: Option<bool>,
}

/// Optional per-cell overrides; which keys apply depends on the experiment.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: Option<String>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub p: Option<f64>,
    pub beta0: Option<f64>,
    pub omega: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub gamma_scale: Option<f64>,
    pub mu_scale: Option<f64>,
    pub tau_scale: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub norm_ata: Option<f64>,
}

impl SolverSection {
    fn set_keys(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let fields: [(&'static str, bool); 17] = [
            ("algorithm", self.algorithm.is_some()),
            ("gamma", self.gamma.is_some()),
            ("mu", self.mu.is_some()),
            ("tau", self.tau.is_some()),
            ("sigma", self.sigma.is_some()),
            ("theta", self.theta.is_some()),
            ("p", self.p.is_some()),
            ("beta0", self.beta0.is_some()),
            ("omega", self.omega.is_some()),
            ("rho1", self.rho1.is_some()),
            ("rho2", self.rho2.is_some()),
            ("gamma_scale", self.gamma_scale.is_some()),
            ("mu_scale", self.mu_scale.is_some()),
            ("tau_scale", self.tau_scale.is_some()),
            ("p1", self.p1.is_some()),
            ("p2", self.p2.is_some()),
            ("norm_ata", self.norm_ata.is_some()),
        ];
        for (k, set) in fields {
            if set {
                out.push(k);
            }
        }
        out
    }

    /// Rejects keys the experiment does not read.
    pub fn check_keys(&self, label: &str, allowed: &[&str], kind: ExperimentKind) -> Result<()> {
        for k in self.set_keys() {
            if !allowed.contains(&k) {
                bail!("[solver.{label}]: key `{k}` is not used by {}", kind.name());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub solver: BTreeMap<String, SolverSection>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed_base: Option<u64>,
    pub out: Option<PathBuf>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("invalid experiment config")?;
        for label in cfg.solver.keys() {
            if !cfg.experiment.algorithms.iter().any(|a| a == label) {
                bail!("[solver.{label}] does not match any entry of `algorithms`");
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(base) = o.seed_base {
            for s in &mut self.experiment.seeds {
                *s += base;
            }
        }
        if let Some(out) = &o.out {
            self.experiment.output = Some(out.clone());
        }
        if let Some(n) = o.max_iter {
            self.experiment.max_iter = Some(n);
        }
        if let Some(t) = o.tol {
            self.experiment.tol = Some(t);
        }
    }

    pub fn section(&self, label: &str) -> SolverSection {
        self.solver.get(label).cloned().unwrap_or_default()
    }
}
