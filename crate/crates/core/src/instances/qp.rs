use super::{instance_rng, QP_STREAM};
use crate::dense;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linops::LinearMap;
use crate::proxcore::ProxFn;
use crate::solvers::{SaddleProblem, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use std::sync::Arc;

/// `min ½xᵀQx + qᵀx` s.t. `Ax ≤ b`, `x ≥ 0`, with a planted KKT pair.
#[derive(Debug, Clone)]
pub struct QpInstance {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub q_mat: Arc<DMatrix<f64>>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub x_star: DVector<f64>,
    pub y_star: DVector<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `‖A‖`
    pub a_norm: f64,
}

/// The metric-cancelling kernel for the x-step at weight `μ`.
#[derive(Debug, Clone)]
pub struct QpKernel {
    /// `ψ = ½‖·‖²_{(rI−Q)/μ}`, so that `μ𝓑_ψ = ½‖·‖²_{rI−Q}`.
    pub psi: Kernel,
    /// `r = μλ_max(Q) + 3`
    pub r: f64,
    /// `λ̄ = ‖rI − μQ‖`
    pub lambda_bar: f64,
}

fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // filled row by row so the draw order matches the row-major text format
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = rng.random::<f64>();
        }
    }
    out
}

fn sparse_uniform(rng: &mut impl Rng, len: usize, density: f64) -> DVector<f64> {
    let nnz = ((density * len as f64).round() as usize).min(len);
    let mut out = DVector::zeros(len);
    let mut support = sample(rng, len, nnz).into_vec();
    support.sort_unstable();
    for i in support {
        // (0, 1): strictly positive on the support
        let mut v = rng.random::<f64>();
        while v == 0.0 {
            v = rng.random::<f64>();
        }
        out[i] = v;
    }
    out
}

/// Random QP with `Q = SᵀS + 2I`, uniform `S` and `A`, sparse planted
/// `x* ≥ 0` (density 0.4) and `y* ≥ 0` (density 0.3),
/// `q = −Qx* − Aᵀy*` and `b = Ax* + ε` with `ε` zero on the support of `y*`.
pub fn make_qp(m: usize, n: usize, seed: u64) -> Result<QpInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParams(format!("QP dimensions must be positive, got {m}×{n}")));
    }
    let mut rng = instance_rng(seed, QP_STREAM);
    let s = uniform_matrix(&mut rng, n, n);
    let a = uniform_matrix(&mut rng, m, n);
    let x_star = sparse_uniform(&mut rng, n, 0.4);
    let y_star = sparse_uniform(&mut rng, m, 0.3);
    let eps = DVector::from_fn(m, |i, _| {
        let v = rng.random::<f64>();
        if y_star[i] != 0.0 {
            0.0
        } else {
            v
        }
    });

    let mut q_mat = s.tr_mul(&s);
    for i in 0..n {
        q_mat[(i, i)] += 2.0;
        for j in 0..i {
            let v = 0.5 * (q_mat[(i, j)] + q_mat[(j, i)]);
            q_mat[(i, j)] = v;
            q_mat[(j, i)] = v;
        }
    }
    let q = -(&q_mat * &x_star + a.tr_mul(&y_star));
    let b = &a * &x_star + eps;
    assemble(m, n, seed, q_mat, q, a, b, x_star, y_star)
}

#[allow(clippy::too_many_arguments)]
pub(super) fn assemble(
    m: usize,
    n: usize,
    seed: u64,
    q_mat: DMatrix<f64>,
    q: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    x_star: DVector<f64>,
    y_star: DVector<f64>,
) -> Result<QpInstance> {
    let eig = dense::symmetric_eigenvalues(&q_mat)?;
    let lambda_min = eig[0];
    let lambda_max = eig[eig.len() - 1];
    let a_norm = LinearMap::Dense(a.clone()).norm();
    let inst = QpInstance { m, n, seed, q_mat: Arc::new(q_mat), q, a, b, x_star, y_star, lambda_min, lambda_max, a_norm };
    inst.check_invariants()?;
    Ok(inst)
}

impl QpInstance {
    /// `λ_min(Q) ≥ 2`, sign constraints, KKT residuals and complementarity.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parse(msg));
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                if self.q_mat[(i, j)] != self.q_mat[(j, i)] {
                    return fail("Q is not symmetric".into());
                }
            }
        }
        if self.lambda_min < 2.0 - 1e-9 * self.lambda_max {
            return fail(format!("λ_min(Q) = {} is below 2", self.lambda_min));
        }
        if self.x_star.iter().any(|v| *v < 0.0) || self.y_star.iter().any(|v| *v < 0.0) {
            return fail("planted solution has negative entries".into());
        }
        let slack = &self.b - &self.a * &self.x_star;
        let scale = 1.0 + self.b.amax() + self.q.amax();
        if slack.iter().any(|v| *v < -1e-8 * scale) {
            return fail("planted x* violates Ax ≤ b".into());
        }
        let stationarity = (&*self.q_mat * &self.x_star + self.a.tr_mul(&self.y_star)) + &self.q;
        if stationarity.amax() > 1e-8 * scale {
            return fail(format!("stationarity residual {}", stationarity.amax()));
        }
        let comp = self.y_star.dot(&slack).abs();
        if comp > 1e-8 * scale {
            return fail(format!("complementarity residual {comp}"));
        }
        Ok(())
    }

    pub fn kernel(&self, mu: f64) -> Result<QpKernel> {
        kernel_from_spectrum(&self.q_mat, self.lambda_min, self.lambda_max, mu)
    }

    /// The saddle problem `½xᵀQx + qᵀx + ⟨Ax, y⟩ − ⟨b, y⟩` over `x, y ≥ 0`
    /// with the metric-cancelling `ψ` for weight `μ`.
    pub fn problem(&self, mu: f64) -> Result<(SaddleProblem, QpKernel)> {
        let kernel = self.kernel(mu)?;
        let p = SaddleProblem::new(
            ProxFn::QuadraticNonneg { q_mat: self.q_mat.clone(), q: self.q.clone() },
            ProxFn::LinearNonneg(self.b.clone()),
            LinearMap::Dense(self.a.clone()),
        )?
        .with_kernels(Kernel::Euclidean, kernel.psi.clone(), Kernel::Euclidean)?
        .with_saddle(self.x_star.clone(), self.y_star.clone())?;
        Ok((p, kernel))
    }
}

fn kernel_from_spectrum(q_mat: &Arc<DMatrix<f64>>, lambda_min: f64, lambda_max: f64, mu: f64) -> Result<QpKernel> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParams(format!("μ must be positive, got {mu}")));
    }
    let r = mu * lambda_max + 3.0;
    let lambda_bar = (r - mu * lambda_min).abs().max((r - mu * lambda_max).abs());
    let psi = Kernel::shifted(q_mat.clone(), lambda_max, r, mu)?;
    Ok(QpKernel { psi, r, lambda_bar })
}

/// `r = μλ_max(Q) + 3`, `λ̄ = ‖rI − μQ‖` and the cancelling kernel.
pub fn qp_kernel(q_mat: &Arc<DMatrix<f64>>, mu: f64) -> Result<QpKernel> {
    let eig = dense::symmetric_eigenvalues(q_mat)?;
    if eig.is_empty() {
        return Err(Error::InvalidParams("empty Q".into()));
    }
    kernel_from_spectrum(q_mat, eig[0], eig[eig.len() - 1], mu)
}

/// The five QP benchmark settings, scaled by `‖A‖` and `λ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpPreset {
    Pdhg,
    /// `θ = 2/3`
    TbdaTheta23,
    TbdaTheta1,
    TbdaTheta2,
    Itbda,
}

impl QpPreset {
    pub const ALL: [QpPreset; 5] =
        [QpPreset::Pdhg, QpPreset::TbdaTheta23, QpPreset::TbdaTheta1, QpPreset::TbdaTheta2, QpPreset::Itbda];

    pub fn name(&self) -> &'static str {
        match self {
            QpPreset::Pdhg => "pdhg",
            QpPreset::TbdaTheta23 => "tbda_t23",
            QpPreset::TbdaTheta1 => "tbda_t1",
            QpPreset::TbdaTheta2 => "tbda_t2",
            QpPreset::Itbda => "itbda",
        }
    }

    /// `(c_γ, c_μ, c_τ)` with `γ = c_γλ̄‖A‖`, `μ = c_μ‖A‖`, `τ = c_τλ̄‖A‖`.
    pub fn scales(&self) -> (f64, f64, f64) {
        match self {
            QpPreset::Pdhg => (1.0, 1.0, 1.0),
            QpPreset::TbdaTheta23 => (4.0, 1.0, 8.0 / 3.0),
            QpPreset::TbdaTheta1 => (1.5, 8.0 / 9.0, 1.5),
            QpPreset::TbdaTheta2 => (8.0 / 7.0, 7.0 / 9.0, 16.0 / 7.0),
            QpPreset::Itbda => (1.0, 2.0 / 3.0, 2.0),
        }
    }
}

impl std::str::FromStr for QpPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QpPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown QP preset `{s}`")))
    }
}

/// Builds the problem and solver configuration of a preset with the scale
/// factors `(c_γ, c_μ, c_τ)`; ITBDA uses `p = 1.5`, `β₀ = c_τ/c_γ` and the
/// exact strong-convexity modulus of `f` relative to `ψ` as `ϱ₁`.
pub fn qp_preset(inst: &QpInstance, preset: QpPreset, scales: (f64, f64, f64)) -> Result<(SaddleProblem, QpKernel, SolverConfig)> {
    let (cg, cm, ct) = scales;
    if ![cg, cm, ct].iter().all(|c| *c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("scale factors must be positive, got {scales:?}")));
    }
    let mu = cm * inst.a_norm;
    let (problem, kernel) = inst.problem(mu)?;
    let unit = kernel.lambda_bar * inst.a_norm;
    let config = match preset {
        QpPreset::Pdhg => SolverConfig::pdhg(cg * unit, mu, 1.0),
        QpPreset::Itbda => {
            // modulus of f relative to ψ: Q ⪰ ϱ₁(rI − Q)/μ
            let rho1 = mu * inst.lambda_min / (kernel.r - inst.lambda_min);
            SolverConfig::itbda(cg * unit, mu, 1.0, ct / cg, 1.5, rho1)
        }
        _ => SolverConfig::tbda(cg * unit, mu, ct * unit, 1.0),
    };
    config.validate()?;
    Ok((problem, kernel, config))
}
