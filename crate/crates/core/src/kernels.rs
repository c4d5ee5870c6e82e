//! Quadratic Bregman kernels `φ(x) = ½‖x‖²_G` and their distances.

use crate::dense;
use crate::error::{check_dim, Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum Kernel {
    /// `½‖x‖²`, valid in any dimension.
    Euclidean,
    /// `½‖x‖²_G` for a symmetric positive definite `G`.
    WeightedQuadratic(Metric),
}

#[derive(Debug, Clone)]
pub struct Metric {
    repr: MetricRepr,
}

#[derive(Debug, Clone)]
enum MetricRepr {
    Dense {
        g: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
        diagonal: Option<DVector<f64>>,
    },
    /// `G = (shift·I − base) / scale`, kept implicit so that the metric of
    /// a large quadratic never has to be materialized or factorized.
    Shifted {
        base: Arc<DMatrix<f64>>,
        shift: f64,
        scale: f64,
    },
}

impl Kernel {
    pub fn euclidean() -> Self {
        Kernel::Euclidean
    }

    /// Builds `½‖x‖²_G`. `G` must be exactly symmetric with smallest
    /// eigenvalue above `1e-10·‖G‖`.
    pub fn weighted(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        check_dim(n, g.ncols())?;
        for i in 0..n {
            for j in 0..i {
                if g[(i, j)] != g[(j, i)] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let eig = dense::symmetric_eigenvalues(&g)?;
        let min_eig = eig.first().copied().unwrap_or(0.0);
        let norm = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if n == 0 || !(min_eig > 1e-10 * norm) {
            return Err(Error::NotPositiveDefinite { min_eig, norm });
        }
        let chol = Cholesky::new(g.clone()).ok_or(Error::NotPositiveDefinite { min_eig, norm })?;
        let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || g[(i, j)] == 0.0));
        let diagonal = is_diag.then(|| g.diagonal());
        Ok(Kernel::WeightedQuadratic(Metric { repr: MetricRepr::Dense { g, chol, diagonal } }))
    }

    /// Builds `½‖x‖²_G` with `G = (shift·I − base)/scale`. The caller
    /// supplies `λ_max(base)`; positive definiteness is checked against it.
    pub fn shifted(base: Arc<DMatrix<f64>>, base_lambda_max: f64, shift: f64, scale: f64) -> Result<Self> {
        check_dim(base.nrows(), base.ncols())?;
        if !(scale > 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::InvalidParams(format!("shifted metric needs finite shift and scale > 0, got {shift}, {scale}")));
        }
        let min_eig = (shift - base_lambda_max) / scale;
        let norm = shift.abs().max(base_lambda_max.abs()) / scale;
        if !(min_eig > 1e-10 * norm) {
            return Err(Error::NotPositiveDefinite { min_eig, norm });
        }
        Ok(Kernel::WeightedQuadratic(Metric { repr: MetricRepr::Shifted { base, shift, scale } }))
    }

    /// Variable dimension, or `None` for the dimension-free Euclidean kernel.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Kernel::Euclidean => None,
            Kernel::WeightedQuadratic(m) => Some(m.dim()),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Kernel::Euclidean)
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, n),
            None => Ok(()),
        }
    }

    /// `G v` (the identity for the Euclidean kernel).
    pub fn metric_apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(v.len())?;
        Ok(match self {
            Kernel::Euclidean => v.clone(),
            Kernel::WeightedQuadratic(m) => m.apply(v),
        })
    }

    /// `G⁻¹ v`.
    pub fn metric_solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(v.len())?;
        match self {
            Kernel::Euclidean => Ok(v.clone()),
            Kernel::WeightedQuadratic(m) => match &m.repr {
                MetricRepr::Dense { chol, .. } => Ok(chol.solve(v)),
                MetricRepr::Shifted { .. } => Err(Error::Unsupported("solve with an implicit shifted metric".into())),
            },
        }
    }

    /// Diagonal of `G` when `G` is diagonal (all ones for Euclidean).
    pub fn diagonal(&self, n: usize) -> Option<DVector<f64>> {
        match self {
            Kernel::Euclidean => Some(DVector::from_element(n, 1.0)),
            Kernel::WeightedQuadratic(m) => match &m.repr {
                MetricRepr::Dense { diagonal, .. } => diagonal.clone(),
                MetricRepr::Shifted { .. } => None,
            },
        }
    }

    /// Materialized `G`.
    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        self.check(n)?;
        Ok(match self {
            Kernel::Euclidean => DMatrix::identity(n, n),
            Kernel::WeightedQuadratic(m) => match &m.repr {
                MetricRepr::Dense { g, .. } => g.clone(),
                MetricRepr::Shifted { base, shift, scale } => {
                    (DMatrix::identity(n, n) * *shift - base.as_ref()) / *scale
                }
            },
        })
    }

    pub(crate) fn shifted_parts(&self) -> Option<(&Arc<DMatrix<f64>>, f64, f64)> {
        match self {
            Kernel::WeightedQuadratic(Metric { repr: MetricRepr::Shifted { base, shift, scale } }) => {
                Some((base, *shift, *scale))
            }
            _ => None,
        }
    }

    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.metric_apply(x)
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(0.5 * x.dot(&self.metric_apply(x)?))
    }

    /// `𝓑(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩ = ½‖x − y‖²_G`.
    pub fn bregman_distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        let d = x - y;
        Ok(0.5 * d.dot(&self.metric_apply(&d)?))
    }

    /// Residual of the three-point identity
    /// `𝓑(x,a) − 𝓑(x,b) − 𝓑(b,a) = ⟨∇φ(b) − ∇φ(a), x − b⟩`.
    pub fn three_point_check(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        check_dim(x.len(), a.len())?;
        check_dim(x.len(), b.len())?;
        let lhs = self.bregman_distance(x, a)? - self.bregman_distance(x, b)? - self.bregman_distance(b, a)?;
        let rhs = (self.grad(b)? - self.grad(a)?).dot(&(x - b));
        Ok((lhs - rhs).abs())
    }
}

impl Metric {
    pub fn dim(&self) -> usize {
        match &self.repr {
            MetricRepr::Dense { g, .. } => g.nrows(),
            MetricRepr::Shifted { base, .. } => base.nrows(),
        }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.repr {
            MetricRepr::Dense { g, .. } => g * v,
            MetricRepr::Shifted { base, shift, scale } => (v * *shift - base.as_ref() * v) / *scale,
        }
    }
}
