use crate::error::Result;
use crate::linops::LinearMap;
use crate::proxcore::ProxFn;
use crate::solvers::SaddleProblem;
use nalgebra::{dvector, DMatrix, DVector};
use std::sync::Arc;

/// `min 2x₁ + x₂` s.t. `x₁ + x₂ = 1`, `x ≥ 0`, written as
/// `min_x max_y ⟨c, x⟩ + ⟨Kx, y⟩ − g(y)` with `K = (−1, −1)` and
/// `g(y) = −y`, i.e. the Lagrangian `⟨c, x⟩ − y(x₁ + x₂ − 1)`. The saddle
/// point is `((0, 1), 1)`.
pub fn make_toy_lp() -> SaddleProblem {
    SaddleProblem::new(
        ProxFn::LinearNonneg(dvector![2.0, 1.0]),
        ProxFn::Linear(dvector![-1.0]),
        LinearMap::RowVector(dvector![-1.0, -1.0]),
    )
    .and_then(|p| p.with_saddle(dvector![0.0, 1.0], dvector![1.0]))
    .expect("toy LP dimensions are consistent")
}

/// `min_x max_y ½x² + xy − ½y²`, saddle `(0, 0)`.
pub fn make_scalar_game() -> SaddleProblem {
    let one = Arc::new(DMatrix::from_element(1, 1, 1.0));
    let build = || -> Result<SaddleProblem> {
        SaddleProblem::new(
            ProxFn::Quadratic { q_mat: one.clone(), q: DVector::zeros(1) },
            ProxFn::Quadratic { q_mat: one.clone(), q: DVector::zeros(1) },
            LinearMap::Dense(DMatrix::from_element(1, 1, 1.0)),
        )?
        .with_saddle(DVector::zeros(1), DVector::zeros(1))
    };
    build().expect("scalar game dimensions are consistent")
}
