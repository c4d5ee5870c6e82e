//! Problem generators and problem-specific metrics.

mod io;
mod qp;
mod rpca;
mod toy;

pub use io::{read_instance, write_instance, Instance};
pub use qp::{make_qp, qp_kernel, qp_preset, QpInstance, QpKernel, QpPreset};
pub use rpca::{make_rpca, rpca_metrics, rpca_problem, rpca_solve, rpca_solve_tol, RpcaInstance, RpcaMetrics, RpcaOutcome};
pub use toy::{make_scalar_game, make_toy_lp};

use crate::error::{check_dim, Error, Result};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id of QP instances.
pub const QP_STREAM: u64 = 1;
/// Stream id of RPCA instances.
pub const RPCA_STREAM: u64 = 2;

/// The generator behind every instance: ChaCha8 seeded from `seed` with
/// `stream` selecting an independent sequence.
pub fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `‖current − reference‖ / ‖reference‖` over the stacked blocks. Pass the
/// truth as reference for the known-solution rule and the previous iterate
/// for the successive-change rule.
pub fn stopping_tol(current: &[&DVector<f64>], reference: &[&DVector<f64>]) -> Result<f64> {
    check_dim(reference.len(), current.len())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, r) in current.iter().zip(reference) {
        check_dim(r.len(), c.len())?;
        num += (*c - *r).norm_squared();
        den += r.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}
