//! Thin bridge to faer for the dense factorizations nalgebra is slow at.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = to_faer(a)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigenvalues: {e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Thin SVD `a = U diag(s) Vᵀ`, singular values in descending order.
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn thin_svd(a: &DMatrix<f64>) -> Result<ThinSvd> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD of a non-finite matrix".into()));
    }
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(ThinSvd { u: DMatrix::zeros(m, 0), s: DVector::zeros(0), v: DMatrix::zeros(n, 0) });
    }
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
        s: DVector::from_fn(k, |i, _| s[i]),
        v: DMatrix::from_fn(n, k, |i, j| v[(i, j)]),
    })
}

/// Singular values only, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD of a non-finite matrix".into()));
    }
    if a.nrows().min(a.ncols()) == 0 {
        return Ok(DVector::zeros(0));
    }
    let s = to_faer(a)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular values: {e:?}")))?;
    let mut s: Vec<f64> = s;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(s))
}
