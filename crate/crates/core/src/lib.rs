//! Triple-Bregman balanced primal-dual algorithms for
//! `min_x max_y f(x) + ⟨Ax, y⟩ − g(y)`.
//!
//! The crate covers TBDA with its improved and accelerated variants, the
//! PDHG, Arrow–Hurwicz and SPIDA baselines, ALM-type presets, and the
//! toy LP, QP and robust PCA instances used to benchmark them.

pub mod dense;
pub mod error;
pub mod instances;
pub mod kernels;
pub mod linops;
pub mod proxcore;
pub mod solvers;
pub mod specializations;

pub use error::{Error, Result};
pub use kernels::Kernel;
pub use linops::LinearMap;
pub use proxcore::{ProxFn, ProxOracle};
pub use solvers::{Algorithm, IterState, SaddleProblem, SolveReport, SolverConfig, Status, TolKind};
