//! Closed-form Bregman proximal oracles.
//!
//! An oracle solves `argmin_x f(x) + ⟨t, x⟩ + w·𝓑(x, a)` over the domain of
//! `f` for an anchor `a` and a linear tilt `t`.

use crate::dense;
use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;

/// Function kinds with closed-form proximal maps.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFn {
    /// `⟨c, x⟩`
    Linear(DVector<f64>),
    /// `⟨c, x⟩ + ι(x ≥ 0)`
    LinearNonneg(DVector<f64>),
    /// `ι(x ≥ 0)`
    IndicatorNonneg,
    /// `λ‖x‖₁`
    L1(f64),
    /// Nuclear norm of the column-major `rows × cols` matrix stored in `x`.
    Nuclear { rows: usize, cols: usize },
    /// `½xᵀQx + qᵀx`
    Quadratic { q_mat: Arc<DMatrix<f64>>, q: DVector<f64> },
    /// `½xᵀQx + qᵀx + ι(x ≥ 0)`
    QuadraticNonneg { q_mat: Arc<DMatrix<f64>>, q: DVector<f64> },
    /// Separable sum over consecutive blocks `(dim, f_i)`.
    BlockSum(Vec<(usize, ProxFn)>),
}

fn nonneg(x: &DVector<f64>) -> bool {
    x.iter().all(|v| *v >= 0.0)
}

impl ProxFn {
    pub fn zero(n: usize) -> Self {
        ProxFn::Linear(DVector::zeros(n))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxFn::Linear(c) | ProxFn::LinearNonneg(c) => Some(c.len()),
            ProxFn::IndicatorNonneg | ProxFn::L1(_) => None,
            ProxFn::Nuclear { rows, cols } => Some(rows * cols),
            ProxFn::Quadratic { q, .. } | ProxFn::QuadraticNonneg { q, .. } => Some(q.len()),
            ProxFn::BlockSum(blocks) => Some(blocks.iter().map(|(d, _)| d).sum()),
        }
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, x.len()),
            None => Ok(()),
        }
    }

    /// Membership in the domain, with no tolerance.
    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        if self.check(x).is_err() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ProxFn::LinearNonneg(_) | ProxFn::IndicatorNonneg | ProxFn::QuadraticNonneg { .. } => nonneg(x),
            ProxFn::BlockSum(blocks) => {
                let mut off = 0;
                blocks.iter().all(|(d, f)| {
                    let ok = f.is_feasible(&x.rows(off, *d).into_owned());
                    off += d;
                    ok
                })
            }
            _ => true,
        }
    }

    /// Value on the domain; an infeasible point is an error, never `+∞`.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        if !self.is_feasible(x) {
            return Err(Error::Infeasible("function evaluated outside its domain".into()));
        }
        Ok(match self {
            ProxFn::Linear(c) | ProxFn::LinearNonneg(c) => c.dot(x),
            ProxFn::IndicatorNonneg => 0.0,
            ProxFn::L1(l) => l * x.lp_norm(1),
            ProxFn::Nuclear { rows, cols } => {
                let m = DMatrix::from_column_slice(*rows, *cols, x.as_slice());
                dense::singular_values(&m)?.sum()
            }
            ProxFn::Quadratic { q_mat, q } | ProxFn::QuadraticNonneg { q_mat, q } => {
                0.5 * x.dot(&(q_mat.as_ref() * x)) + q.dot(x)
            }
            ProxFn::BlockSum(blocks) => {
                let mut off = 0;
                let mut total = 0.0;
                for (d, f) in blocks {
                    total += f.value(&x.rows(off, *d).into_owned())?;
                    off += d;
                }
                total
            }
        })
    }
}

/// Entrywise soft threshold; `|z| = t` maps to zero.
pub fn shrink_l1(z: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    check_threshold(threshold)?;
    Ok(z.map(|v| soft(v, threshold)))
}

fn check_threshold(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("threshold must be a finite nonnegative number, got {t}")))
    }
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Singular value thresholding `U·shrink(Σ, t)·Vᵀ`.
pub fn svt(x: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    check_threshold(threshold)?;
    let (m, n) = x.shape();
    if x.iter().all(|v| *v == 0.0) {
        return Ok(DMatrix::zeros(m, n));
    }
    let svd = dense::thin_svd(x)?;
    let kept = svd.s.iter().take_while(|s| **s > threshold).count();
    if kept == 0 {
        return Ok(DMatrix::zeros(m, n));
    }
    let mut u = svd.u.columns(0, kept).into_owned();
    for j in 0..kept {
        let s = svd.s[j] - threshold;
        u.column_mut(j).scale_mut(s);
    }
    Ok(u * svd.v.columns(0, kept).transpose())
}

/// `Π₊(anchor − (Q·anchor + q + tilt)/r)`: the exact minimizer of
/// `½xᵀQx + qᵀx + ⟨tilt, x⟩ + ½‖x − anchor‖²_{rI−Q}` over `x ≥ 0`.
pub fn prox_quadratic_nonneg(
    q_mat: &DMatrix<f64>,
    q: &DVector<f64>,
    tilt: &DVector<f64>,
    anchor: &DVector<f64>,
    r: f64,
) -> Result<DVector<f64>> {
    let n = q.len();
    check_dim(n, q_mat.nrows())?;
    check_dim(n, q_mat.ncols())?;
    check_dim(n, tilt.len())?;
    check_dim(n, anchor.len())?;
    let lmax = dense::symmetric_eigenvalues(q_mat)?.last().copied().unwrap_or(0.0);
    if !(r > lmax) {
        return Err(Error::NotPositiveDefinite { min_eig: r - lmax, norm: r.abs().max(lmax.abs()) });
    }
    Ok(cancelled_step(q_mat, q, tilt, anchor, r))
}

fn cancelled_step(q_mat: &DMatrix<f64>, q: &DVector<f64>, tilt: &DVector<f64>, anchor: &DVector<f64>, r: f64) -> DVector<f64> {
    let mut g = q_mat * anchor;
    g += q;
    g += tilt;
    DVector::from_fn(anchor.len(), |i, _| (anchor[i] - g[i] / r).max(0.0))
}

#[derive(Debug, Clone)]
enum Plan {
    /// `x = a − G⁻¹(c + t)/w`
    LinearStep(DVector<f64>),
    /// Diagonal metric: `x = Π₊(a − (c + t)/(w·d))`
    ProjectedStep { c: DVector<f64>, diag: DVector<f64> },
    SoftThreshold(f64),
    Svt { rows: usize, cols: usize },
    /// `(Q + wG) x = wG a − q − t`
    QuadraticSolve { chol: Cholesky<f64, Dyn>, q: DVector<f64> },
    /// `Q + wG = rI`
    Cancelled { r: f64 },
    Blocks(Vec<(usize, ProxOracle<'static>)>),
}

/// A function, a kernel and a weight, with the solution path decided once.
#[derive(Debug, Clone)]
pub struct ProxOracle<'a> {
    func: std::borrow::Cow<'a, ProxFn>,
    kernel: std::borrow::Cow<'a, Kernel>,
    weight: f64,
    plan: Plan,
}

impl<'a> ProxOracle<'a> {
    pub fn new(func: &'a ProxFn, kernel: &'a Kernel, weight: f64) -> Result<Self> {
        let plan = make_plan(func, kernel, weight)?;
        Ok(ProxOracle {
            func: std::borrow::Cow::Borrowed(func),
            kernel: std::borrow::Cow::Borrowed(kernel),
            weight,
            plan,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn func(&self) -> &ProxFn {
        &self.func
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// `argmin f(x) + ⟨tilt, x⟩ + w·𝓑(x, anchor)`.
    pub fn prox(&self, anchor: &DVector<f64>, tilt: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(anchor.len(), tilt.len())?;
        self.func.check(anchor)?;
        if let Some(d) = self.kernel.dim() {
            check_dim(d, anchor.len())?;
        }
        let w = self.weight;
        match &self.plan {
            Plan::LinearStep(c) => {
                let step = self.kernel.metric_solve(&(c + tilt))?;
                Ok(anchor - step / w)
            }
            Plan::ProjectedStep { c, diag } => Ok(DVector::from_fn(anchor.len(), |i, _| {
                let ci = if c.is_empty() { 0.0 } else { c[i] };
                let di = if diag.is_empty() { 1.0 } else { diag[i] };
                (anchor[i] - (ci + tilt[i]) / (w * di)).max(0.0)
            })),
            Plan::SoftThreshold(l) => {
                let t = l / w;
                Ok(DVector::from_fn(anchor.len(), |i, _| soft(anchor[i] - tilt[i] / w, t)))
            }
            Plan::Svt { rows, cols } => {
                let shifted = anchor - tilt / w;
                let m = DMatrix::from_column_slice(*rows, *cols, shifted.as_slice());
                let out = svt(&m, 1.0 / w)?;
                Ok(DVector::from_column_slice(out.as_slice()))
            }
            Plan::QuadraticSolve { chol, q } => {
                let rhs = self.kernel.metric_apply(anchor)? * w - q - tilt;
                Ok(chol.solve(&rhs))
            }
            Plan::Cancelled { r } => match self.func.as_ref() {
                ProxFn::QuadraticNonneg { q_mat, q } => Ok(cancelled_step(q_mat, q, tilt, anchor, *r)),
                _ => unreachable!("cancelled plan is only built for QuadraticNonneg"),
            },
            Plan::Blocks(blocks) => {
                let mut out = DVector::zeros(anchor.len());
                let mut off = 0;
                for (d, oracle) in blocks {
                    let a = anchor.rows(off, *d).into_owned();
                    let t = tilt.rows(off, *d).into_owned();
                    out.rows_mut(off, *d).copy_from(&oracle.prox(&a, &t)?);
                    off += d;
                }
                Ok(out)
            }
        }
    }
}

/// One-shot convenience wrapper around [`ProxOracle`].
pub fn bregman_prox(func: &ProxFn, kernel: &Kernel, weight: f64, anchor: &DVector<f64>, tilt: &DVector<f64>) -> Result<DVector<f64>> {
    ProxOracle::new(func, kernel, weight)?.prox(anchor, tilt)
}

fn unsupported(func: &ProxFn, kernel: &Kernel) -> Error {
    let k = if kernel.is_euclidean() { "Euclidean" } else { "weighted quadratic" };
    Error::Unsupported(format!("no closed-form prox for {} under a {k} kernel", kind_name(func)))
}

fn kind_name(func: &ProxFn) -> &'static str {
    match func {
        ProxFn::Linear(_) => "Linear",
        ProxFn::LinearNonneg(_) => "LinearNonneg",
        ProxFn::IndicatorNonneg => "IndicatorNonneg",
        ProxFn::L1(_) => "L1",
        ProxFn::Nuclear { .. } => "Nuclear",
        ProxFn::Quadratic { .. } => "Quadratic",
        ProxFn::QuadraticNonneg { .. } => "QuadraticNonneg",
        ProxFn::BlockSum(_) => "BlockSum",
    }
}

fn make_plan(func: &ProxFn, kernel: &Kernel, weight: f64) -> Result<Plan> {
    if !(weight > 0.0) || !weight.is_finite() {
        return Err(Error::InvalidParams(format!("proximal weight must be positive and finite, got {weight}")));
    }
    if let (Some(a), Some(b)) = (func.dim(), kernel.dim()) {
        check_dim(a, b)?;
    }
    let n = func.dim().or(kernel.dim());
    Ok(match func {
        ProxFn::Linear(c) => {
            if kernel.shifted_parts().is_some() {
                return Err(unsupported(func, kernel));
            }
            Plan::LinearStep(c.clone())
        }
        ProxFn::LinearNonneg(_) | ProxFn::IndicatorNonneg => {
            let c = match func {
                ProxFn::LinearNonneg(c) => c.clone(),
                _ => DVector::zeros(0),
            };
            let diag = match (kernel, n) {
                (Kernel::Euclidean, _) => None,
                (_, Some(n)) => kernel.diagonal(n),
                _ => None,
            };
            match (kernel.is_euclidean(), diag) {
                (true, _) => Plan::ProjectedStep { c, diag: DVector::zeros(0) },
                (false, Some(d)) => Plan::ProjectedStep { c, diag: d },
                (false, None) => return Err(unsupported(func, kernel)),
            }
        }
        ProxFn::L1(l) => {
            if !kernel.is_euclidean() {
                return Err(unsupported(func, kernel));
            }
            check_threshold(*l)?;
            Plan::SoftThreshold(*l)
        }
        ProxFn::Nuclear { rows, cols } => {
            if !kernel.is_euclidean() {
                return Err(unsupported(func, kernel));
            }
            Plan::Svt { rows: *rows, cols: *cols }
        }
        ProxFn::Quadratic { q_mat, q } => {
            let n = q.len();
            check_dim(n, q_mat.nrows())?;
            let h = q_mat.as_ref() + kernel.matrix(n)? * weight;
            let chol = Cholesky::new(h).ok_or_else(|| Error::Numerical("quadratic prox system is not positive definite".into()))?;
            Plan::QuadraticSolve { chol, q: q.clone() }
        }
        ProxFn::QuadraticNonneg { q_mat, .. } => {
            let Some((base, shift, scale)) = kernel.shifted_parts() else {
                return Err(unsupported(func, kernel));
            };
            let same_base = Arc::ptr_eq(base, q_mat) || base.as_ref() == q_mat.as_ref();
            if !same_base || (weight - scale).abs() > 1e-12 * scale {
                return Err(Error::Unsupported(
                    "QuadraticNonneg needs the metric (rI − Q)/w built from the same Q and weight w".into(),
                ));
            }
            Plan::Cancelled { r: shift }
        }
        ProxFn::BlockSum(blocks) => {
            if !kernel.is_euclidean() {
                return Err(unsupported(func, kernel));
            }
            let mut plans = Vec::with_capacity(blocks.len());
            for (d, f) in blocks {
                if let Some(fd) = f.dim() {
                    check_dim(*d, fd)?;
                }
                let oracle = ProxOracle {
                    func: std::borrow::Cow::Owned(f.clone()),
                    kernel: std::borrow::Cow::Owned(Kernel::Euclidean),
                    weight,
                    plan: make_plan(f, &Kernel::Euclidean, weight)?,
                };
                plans.push((*d, oracle));
            }
            Plan::Blocks(plans)
        }
    })
}
