use anyhow::{Context, Result};
use std::path::Path;

pub const SOLVER_HEADER: [&str; 9] = ["algorithm", "seed", "iter", "tol", "gap", "P", "D", "a_k", "time_ms"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["k", "x1", "x2", "y_tilde", "y"];
pub const VERDICT_HEADER: [&str; 8] = ["label", "theta", "sigma", "norm_ata", "threshold", "case", "mu_gamma", "satisfied"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRow {
    pub algorithm: String,
    pub seed: Option<u64>,
    pub iter: usize,
    pub tol: f64,
    pub gap: Option<f64>,
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub a_k: Option<f64>,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub x1: f64,
    pub x2: f64,
    /// Empty for methods without a prediction step.
    pub y_tilde: Option<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub label: String,
    pub theta: f64,
    pub sigma: f64,
    pub norm_ata: f64,
    pub threshold: f64,
    pub case: String,
    pub mu_gamma: Option<f64>,
    pub satisfied: Option<bool>,
}

pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRecord for SolverRow {
    const HEADER: &'static [&'static str] = &SOLVER_HEADER;

    fn fields(&self) -> Vec<String> {
        vec![
            self.algorithm.clone(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.iter.to_string(),
            num(self.tol),
            opt(self.gap),
            opt(self.primal),
            opt(self.dual),
            opt(self.a_k),
            num(self.time_ms),
        ]
    }
}

impl CsvRecord for TrajectoryRow {
    const HEADER: &'static [&'static str] = &TRAJECTORY_HEADER;

    fn fields(&self) -> Vec<String> {
        vec![self.k.to_string(), num(self.x1), num(self.x2), opt(self.y_tilde), num(self.y)]
    }
}

impl CsvRecord for VerdictRow {
    const HEADER: &'static [&'static str] = &VERDICT_HEADER;

    fn fields(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            num(self.theta),
            num(self.sigma),
            num(self.norm_ata),
            num(self.threshold),
            self.case.clone(),
            opt(self.mu_gamma),
            self.satisfied.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }
}

/// Header plus one line per record.
pub fn emit_csv<R: CsvRecord>(records: &[R], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(R::HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}
