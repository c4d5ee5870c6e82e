//! The coupling operator `A` and its spectral norm.

use crate::error::{check_dim, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LinearMap {
    Dense(DMatrix<f64>),
    /// `A = [I I … I]` with `blocks` identity blocks of size `dim`.
    StackedIdentity { blocks: usize, dim: usize },
    /// A single row `aᵀ`, mapping `ℝⁿ → ℝ`.
    RowVector(DVector<f64>),
}

/// Result of power iteration on `AᵀA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const DEFAULT_NORM_TOL: f64 = 1e-8;
pub const DEFAULT_NORM_MAX_ITER: usize = 5000;

impl LinearMap {
    pub fn identity(n: usize) -> Self {
        LinearMap::StackedIdentity { blocks: 1, dim: n }
    }

    /// `(m, n)` for `A: ℝⁿ → ℝᵐ`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            LinearMap::Dense(a) => a.shape(),
            LinearMap::StackedIdentity { blocks, dim } => (*dim, blocks * dim),
            LinearMap::RowVector(r) => (1, r.len()),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, n) = self.dims();
        check_dim(n, x.len())?;
        Ok(match self {
            LinearMap::Dense(a) => a * x,
            LinearMap::StackedIdentity { blocks, dim } => {
                let mut out = DVector::zeros(m);
                for b in 0..*blocks {
                    out += x.rows(b * dim, *dim);
                }
                out
            }
            LinearMap::RowVector(r) => DVector::from_element(1, r.dot(x)),
        })
    }

    pub fn adjoint(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, n) = self.dims();
        check_dim(m, y.len())?;
        Ok(match self {
            LinearMap::Dense(a) => a.tr_mul(y),
            LinearMap::StackedIdentity { blocks, dim } => {
                let mut out = DVector::zeros(n);
                for b in 0..*blocks {
                    out.rows_mut(b * dim, *dim).copy_from(y);
                }
                out
            }
            LinearMap::RowVector(r) => r * y[0],
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearMap::Dense(a) => a.clone(),
            LinearMap::StackedIdentity { blocks, dim } => {
                let mut a = DMatrix::zeros(*dim, blocks * dim);
                for b in 0..*blocks {
                    for i in 0..*dim {
                        a[(i, b * dim + i)] = 1.0;
                    }
                }
                a
            }
            LinearMap::RowVector(r) => DMatrix::from_row_slice(1, r.len(), r.as_slice()),
        }
    }

    pub fn transpose(&self) -> LinearMap {
        match self {
            LinearMap::Dense(a) => LinearMap::Dense(a.transpose()),
            other => LinearMap::Dense(other.to_dense().transpose()),
        }
    }

    /// `‖A‖` by power iteration on `AᵀA` from the normalized all-ones
    /// vector. Stops when the Rayleigh quotient changes by less than
    /// `tol` relative; otherwise returns the last estimate unconverged.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> NormEstimate {
        let (_, n) = self.dims();
        if n == 0 {
            return NormEstimate { value: 0.0, converged: true, iterations: 0 };
        }
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut lambda = 0.0_f64;
        for it in 1..=max_iter {
            // dimensions are consistent by construction
            let w = self.adjoint(&self.apply(&v).unwrap()).unwrap();
            let next = v.dot(&w);
            let wn = w.norm();
            if wn == 0.0 {
                return NormEstimate { value: 0.0, converged: true, iterations: it };
            }
            let done = (next - lambda).abs() <= tol * next.abs();
            lambda = next;
            v = w / wn;
            if done {
                return NormEstimate { value: lambda.max(0.0).sqrt(), converged: true, iterations: it };
            }
        }
        NormEstimate { value: lambda.max(0.0).sqrt(), converged: false, iterations: max_iter }
    }

    pub fn norm(&self) -> f64 {
        self.spectral_norm(DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER).value
    }
}
