//! Synthetic laws of `(X, Y)` whose regression function, Bayes rule and
//! margin behaviour are known in closed form.
//!
//! Three families are provided: the hypercube of perturbed cells used for
//! lower bounds ([`HypercubeParams`]), a quadratic regression function on a
//! ball ([`Parabola`]), and a law whose two classes are separated by an
//! empty band ([`Corridor`]).

mod bump;
mod corridor;
mod hypercube;
mod parabola;

pub use bump::{adaptive_simpson, bump_u, u1_scaled, BumpTable, TABLE_INTERVALS};
pub use corridor::{make_corridor, Corridor};
pub use hypercube::{
    assouad_bound, calibrate_c_phi, grid_points, hypercube_eta, nearest_grid, phi_taylor_remainder,
    sample_hypercube, DensityMode, HypercubeParams,
};
pub use parabola::{make_parabola, Parabola};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::classify::{DensityParams, HolderParams, MarginParams};
use crate::data::{Dataset, Label};

/// Generator used for every simulated draw.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("grid constraint violated: {0}")]
    GridConstraint(String),
    #[error("degenerate support: {0}")]
    DegenerateSupport(String),
    #[error("no C_phi in [2^-20, 1] passes the Holder certificate for beta = {beta}, L = {lip}")]
    CalibrationFailed { beta: f64, lip: f64 },
    #[error("regression function leaves [0, 1]: {0}")]
    RangeViolation(String),
}

/// A law of `(X, Y)` with known regression function.
pub trait OracleDistribution: Send + Sync {
    fn dim(&self) -> usize;

    /// Draws one `X ~ P_X` into `out`.
    fn sample_x(&self, rng: &mut SimRng, out: &mut [f64]);

    /// `η(x) = P(Y = 1 | X = x)`.
    fn eta(&self, x: &[f64]) -> f64;

    fn bayes(&self, x: &[f64]) -> Label {
        Label::from(self.eta(x) >= 0.5)
    }

    fn margin(&self) -> MarginParams;
    fn holder(&self) -> HolderParams;
    fn density(&self) -> DensityParams;

    /// Generator name.
    fn descriptor(&self) -> String;

    /// Parameters as `(key, value)` pairs for metadata files.
    fn parameters(&self) -> Vec<(String, String)>;

    /// `n` independent pairs with `Y | X ~ Bernoulli(η(X))`.
    fn sample(&self, seed: u64, n: usize) -> Dataset {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut data = Dataset::with_capacity(self.dim(), n).expect("oracle dimension is positive");
        let mut x = vec![0.0; self.dim()];
        for _ in 0..n {
            self.sample_x(&mut rng, &mut x);
            let y = Label::from(rng.random::<f64>() < self.eta(&x));
            data.push(&x, y).expect("oracle draws are finite");
        }
        data
    }
}

/// Uniform draw from the ball `B(center, radius)`.
pub(crate) fn uniform_in_ball(rng: &mut SimRng, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = center.len();
    let mut norm2 = 0.0;
    while norm2 == 0.0 {
        for o in out.iter_mut() {
            *o = rng.sample::<f64, _>(StandardNormal);
        }
        norm2 = out.iter().map(|v| v * v).sum();
    }
    let scale = radius * rng.random::<f64>().powf(1.0 / d as f64) / norm2.sqrt();
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + *o * scale;
    }
}

/// Lebesgue volume of `B(0, r)` in `ℝᵈ`.
pub(crate) fn ball_volume(d: usize, r: f64) -> f64 {
    crate::lp::unit_ball_volume(d) * r.powi(d as i32)
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), SynthError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SynthError::InvalidParams(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_draws_stay_inside_and_fill_uniformly() {
        let mut rng = SimRng::seed_from_u64(1);
        let mut x = [0.0; 3];
        let n = 100_000;
        let mut inner = 0;
        for _ in 0..n {
            uniform_in_ball(&mut rng, &[1.0, 2.0, 3.0], 0.5, &mut x);
            let r = ((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 3.0).powi(2)).sqrt();
            assert!(r <= 0.5 + 1e-12);
            if r <= 0.25 {
                inner += 1;
            }
        }
        // inner half-radius ball holds 1/8 of the volume
        let p = inner as f64 / n as f64;
        assert!((p - 0.125).abs() < 3.0 * (0.125 * 0.875 / n as f64).sqrt());
    }
}
