use crate::error::{Error, Result};
use nalgebra::DVector;

/// Stored iterates of a run: `x` and `y` hold indices `0..=N`, the
/// prediction `y_tilde` and extrapolation `x_bar` hold `1..=N`, and `beta`
/// holds `β_0..=β_N` for ITBDA runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub y_tilde: Vec<DVector<f64>>,
    pub x_bar: Vec<DVector<f64>>,
    pub beta: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.y_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_tilde.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ErgodicScheme {
    /// `𝐱ᴺ = (σxᴺ + Σ xᵏ)/(σ + N)`, `𝐲ᴺ = mean ỹᵏ`.
    Uniform { sigma: f64 },
    /// `𝐱ᴺ = (σx⁰ + β₀Σ x̄ᵏ/β_{k−1})/(σ + β₀Σ 1/β_{k−1})`, `𝐲ᴺ` weighted by `1/β_{k−1}`.
    BetaWeighted { sigma: f64, betas: Vec<f64> },
    /// `𝐱ᴺ = (σx⁰ + Σ ω^{k−1}x̄ᵏ)/(σ + Σ ω^{k−1})`, `𝐲ᴺ` weighted by `ω^{k−1}`.
    GeometricWeighted { sigma: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Uniform,
    Beta { beta0: f64 },
    Geometric { omega: f64 },
}

/// Running sums for the ergodic averages. Geometric weights are kept
/// normalized by `ω^{N−1}` so long runs do not overflow.
#[derive(Debug, Clone)]
pub struct ErgodicAccumulator {
    mode: Mode,
    sigma: f64,
    sigma_factor: f64,
    x0: DVector<f64>,
    last_x: DVector<f64>,
    sum_x: DVector<f64>,
    sum_y: DVector<f64>,
    weight: f64,
    n: usize,
}

impl ErgodicAccumulator {
    pub fn uniform(sigma: f64, x0: &DVector<f64>, dim_y: usize) -> Self {
        Self::build(Mode::Uniform, sigma, sigma, x0, dim_y)
    }

    pub fn beta_weighted(sigma: f64, beta0: f64, x0: &DVector<f64>, dim_y: usize) -> Self {
        Self::build(Mode::Beta { beta0 }, sigma, sigma, x0, dim_y)
    }

    pub fn geometric(sigma: f64, omega: f64, x0: &DVector<f64>, dim_y: usize) -> Self {
        Self::build(Mode::Geometric { omega }, sigma, sigma * omega, x0, dim_y)
    }

    fn build(mode: Mode, sigma: f64, sigma_factor: f64, x0: &DVector<f64>, dim_y: usize) -> Self {
        ErgodicAccumulator {
            mode,
            sigma,
            sigma_factor,
            x0: x0.clone(),
            last_x: x0.clone(),
            sum_x: DVector::zeros(x0.len()),
            sum_y: DVector::zeros(dim_y),
            weight: 0.0,
            n: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Adds iteration `k`: `xᵏ`, `x̄ᵏ`, `ỹᵏ` and `β_{k−1}` (ignored unless beta-weighted).
    pub fn push(&mut self, x: &DVector<f64>, x_bar: &DVector<f64>, y_tilde: &DVector<f64>, beta_prev: f64) {
        self.n += 1;
        match self.mode {
            Mode::Uniform => {
                self.sum_x += x;
                self.sum_y += y_tilde;
                self.weight += 1.0;
                self.last_x.copy_from(x);
            }
            Mode::Beta { .. } => {
                let w = 1.0 / beta_prev;
                self.sum_x.axpy(w, x_bar, 1.0);
                self.sum_y.axpy(w, y_tilde, 1.0);
                self.weight += w;
            }
            Mode::Geometric { omega } => {
                let decay = 1.0 / omega;
                self.sum_x.axpy(1.0, x_bar, decay);
                self.sum_y.axpy(1.0, y_tilde, decay);
                self.weight = self.weight * decay + 1.0;
                self.sigma_factor *= decay;
            }
        }
    }

    pub fn average(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        if self.n == 0 {
            return Err(Error::EmptyTrajectory);
        }
        let y = &self.sum_y / self.weight;
        let x = match self.mode {
            Mode::Uniform => (&self.last_x * self.sigma + &self.sum_x) / (self.sigma + self.weight),
            Mode::Beta { beta0 } => (&self.x0 * self.sigma + &self.sum_x * beta0) / (self.sigma + beta0 * self.weight),
            Mode::Geometric { .. } => (&self.x0 * self.sigma_factor + &self.sum_x) / (self.sigma_factor + self.weight),
        };
        Ok((x, y))
    }
}

/// Ergodic pair of a stored trajectory under the given scheme.
pub fn ergodic_average(trajectory: &Trajectory, scheme: &ErgodicScheme) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = trajectory.len();
    if n == 0 || trajectory.x.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let x0 = &trajectory.x[0];
    let dim_y = trajectory.y_tilde[0].len();
    let mut acc = match scheme {
        ErgodicScheme::Uniform { sigma } => ErgodicAccumulator::uniform(*sigma, x0, dim_y),
        ErgodicScheme::BetaWeighted { sigma, betas } => {
            if betas.len() < n {
                return Err(Error::InvalidParams(format!("need {n} β values, got {}", betas.len())));
            }
            ErgodicAccumulator::beta_weighted(*sigma, betas[0], x0, dim_y)
        }
        ErgodicScheme::GeometricWeighted { sigma, omega } => {
            if !(*omega > 1.0) {
                return Err(Error::InvalidParams(format!("ω must exceed 1, got {omega}")));
            }
            ErgodicAccumulator::geometric(*sigma, *omega, x0, dim_y)
        }
    };
    let needs_x = matches!(scheme, ErgodicScheme::Uniform { .. });
    if needs_x && trajectory.x.len() < n + 1 {
        return Err(Error::InvalidParams("uniform averaging needs x¹..xᴺ".into()));
    }
    if !needs_x && trajectory.x_bar.len() < n {
        return Err(Error::InvalidParams("weighted averaging needs x̄¹..x̄ᴺ".into()));
    }
    for k in 1..=n {
        let beta_prev = match scheme {
            ErgodicScheme::BetaWeighted { betas, .. } => betas[k - 1],
            _ => 1.0,
        };
        let x = if needs_x { &trajectory.x[k] } else { &trajectory.x_bar[k - 1] };
        let x_bar = if needs_x { x } else { &trajectory.x_bar[k - 1] };
        acc.push(x, x_bar, &trajectory.y_tilde[k - 1], beta_prev);
    }
    acc.average()
}
