//! ALM-type presets and the parallel multi-block scheme.

use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use crate::linops::LinearMap;
use crate::proxcore::{ProxFn, ProxOracle};
use crate::solvers::{Algorithm, SaddleProblem, SolverConfig};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlmVariant {
    /// `ψ = ½‖·‖²_{AᵀA}`, `μ = 1/γ`, `τ = γ`, `σ = 0`.
    StandardAlm,
    /// `ψ = ½‖·‖²`.
    LinearizedAlm,
    /// `φ̂ = ½‖·‖²_{AAᵀ+κI}`, `μ = 1/γ`, `σ = τ = 1`.
    BalancedAlm { kappa: f64 },
    /// `φ = φ̂ = ½‖·‖²_{AAᵀ+κI}`, `σ = 0`.
    DoublyBalanced { kappa: f64 },
}

/// Step weights for [`build_alm`]. `mu` defaults to `1/γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmParams {
    pub gamma: f64,
    pub tau: f64,
    pub sigma: f64,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AlmSetup {
    pub problem: SaddleProblem,
    pub config: SolverConfig,
    /// Ridge added to `AᵀA` when it is singular.
    pub ridge: Option<f64>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// TBDA on `min f(x) s.t. Ax = b`, i.e. `f(x) + ⟨Ax, y⟩ − ⟨b, y⟩`, with the
/// kernels and weights of the chosen ALM variant.
pub fn build_alm(variant: AlmVariant, f: ProxFn, a: &LinearMap, b: &DVector<f64>, params: AlmParams) -> Result<AlmSetup> {
    let AlmParams { gamma, tau, sigma, mu } = params;
    if !(gamma > 0.0) || !(tau > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidParams(format!("need γ, τ > 0 and σ ≥ 0, got {gamma}, {tau}, {sigma}")));
    }
    let (m, n) = a.dims();
    check_dim(m, b.len())?;
    let mu = mu.unwrap_or(1.0 / gamma);
    let dense = a.to_dense();
    let require = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::InvalidParams(format!("{what}"))) };
    let balanced_metric = |kappa: f64| -> Result<Kernel> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParams(format!("κ must be positive, got {kappa}")));
        }
        let mut g = &dense * dense.transpose();
        symmetrize(&mut g);
        for i in 0..m {
            g[(i, i)] += kappa;
        }
        Kernel::weighted(g)
    };

    let mut ridge = None;
    let (phi, psi, phi_hat) = match variant {
        AlmVariant::StandardAlm => {
            require(close(mu, 1.0 / gamma), "standard ALM needs μ = 1/γ")?;
            require(close(tau, gamma), "standard ALM needs τ = γ")?;
            require(sigma == 0.0, "standard ALM needs σ = 0")?;
            let mut ata = dense.transpose() * &dense;
            symmetrize(&mut ata);
            let psi = match Kernel::weighted(ata.clone()) {
                Ok(k) => k,
                Err(Error::NotPositiveDefinite { norm, .. }) => {
                    let eps = 1e-8 * norm;
                    for i in 0..n {
                        ata[(i, i)] += eps;
                    }
                    ridge = Some(eps);
                    Kernel::weighted(ata)?
                }
                Err(e) => return Err(e),
            };
            (Kernel::Euclidean, psi, Kernel::Euclidean)
        }
        AlmVariant::LinearizedAlm => (Kernel::Euclidean, Kernel::Euclidean, Kernel::Euclidean),
        AlmVariant::BalancedAlm { kappa } => {
            require(close(mu, 1.0 / gamma), "balanced ALM needs μ = 1/γ")?;
            require(sigma == 1.0 && tau == 1.0, "balanced ALM needs σ = τ = 1")?;
            (Kernel::Euclidean, Kernel::Euclidean, balanced_metric(kappa)?)
        }
        AlmVariant::DoublyBalanced { kappa } => {
            require(sigma == 0.0, "doubly balanced ALM needs σ = 0")?;
            let k = balanced_metric(kappa)?;
            (k.clone(), Kernel::Euclidean, k)
        }
    };
    let problem = SaddleProblem::new(f, ProxFn::Linear(b.clone()), a.clone())?.with_kernels(phi, psi, phi_hat)?;
    let config = SolverConfig::tbda(gamma, mu, tau, sigma);
    Ok(AlmSetup { problem, config, ridge })
}

fn symmetrize(g: &mut DMatrix<f64>) {
    let n = g.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
}

/// One block `(f_i, A_i, ψ_i)` of a separable problem.
#[derive(Debug, Clone)]
pub struct Block {
    pub f: ProxFn,
    pub a: LinearMap,
    pub psi: Kernel,
}

/// `min Σ f_i(x_i) + ⟨Σ A_i x_i, y⟩ − g(y)`.
#[derive(Debug, Clone)]
pub struct BlockProblem {
    pub blocks: Vec<Block>,
    pub g: ProxFn,
    pub phi: Kernel,
    pub phi_hat: Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub k: usize,
    pub x: Vec<DVector<f64>>,
    pub x_bar: Vec<DVector<f64>>,
    pub y_tilde: DVector<f64>,
    pub y: DVector<f64>,
}

impl BlockState {
    pub fn new(x0: Vec<DVector<f64>>, y0: DVector<f64>) -> Self {
        BlockState { k: 0, x_bar: x0.clone(), x: x0, y_tilde: y0.clone(), y: y0 }
    }
}

impl BlockProblem {
    pub fn new(blocks: Vec<Block>, g: ProxFn) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 blocks, got {}", blocks.len())));
        }
        let m = blocks[0].a.dims().0;
        for blk in &blocks {
            let (bm, bn) = blk.a.dims();
            check_dim(m, bm)?;
            if let Some(d) = blk.f.dim() {
                check_dim(bn, d)?;
            }
        }
        if let Some(d) = g.dim() {
            check_dim(m, d)?;
        }
        Ok(BlockProblem { blocks, g, phi: Kernel::Euclidean, phi_hat: Kernel::Euclidean })
    }

    /// Ordered reduction `Σ A_i x_i`.
    fn combine(&self, xs: &[DVector<f64>]) -> Result<DVector<f64>> {
        check_dim(self.blocks.len(), xs.len())?;
        let m = self.blocks[0].a.dims().0;
        let mut out = DVector::zeros(m);
        for (blk, x) in self.blocks.iter().zip(xs) {
            out += blk.a.apply(x)?;
        }
        Ok(out)
    }
}

/// One step of the parallel Jacobian scheme: a shared prediction `ỹ`,
/// independent block updates from `(x_iᵏ, ỹ)`, per-block extrapolation,
/// and a shared correction from `Σ A_i x̄_i`.
pub fn multiblock_step(problem: &BlockProblem, config: &SolverConfig, state: &BlockState) -> Result<BlockState> {
    if !matches!(config.algorithm, Algorithm::Tbda | Algorithm::Atbda) {
        return Err(Error::Unsupported(format!("multi-block scheme runs TBDA steps, not {}", config.algorithm)));
    }
    config.validate()?;
    let (gamma, mu, tau) = config.weights();
    let predict = ProxOracle::new(&problem.g, &problem.phi, gamma)?;
    let y_tilde = predict.prox(&state.y, &-problem.combine(&state.x)?)?;

    let mut x = Vec::with_capacity(problem.blocks.len());
    let mut x_bar = Vec::with_capacity(problem.blocks.len());
    for (blk, xi) in problem.blocks.iter().zip(&state.x) {
        let oracle = ProxOracle::new(&blk.f, &blk.psi, mu)?;
        let next = oracle.prox(xi, &blk.a.adjoint(&y_tilde)?)?;
        let bar = if config.sigma == 0.0 { next.clone() } else { &next + (&next - xi) * config.sigma };
        x.push(next);
        x_bar.push(bar);
    }

    let correct = ProxOracle::new(&problem.g, &problem.phi_hat, tau)?;
    let y = correct.prox(&state.y, &-problem.combine(&x_bar)?)?;
    Ok(BlockState { k: state.k + 1, x, x_bar, y_tilde, y })
}
