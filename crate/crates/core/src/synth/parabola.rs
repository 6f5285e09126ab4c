use rand::Rng;

use super::{ball_volume, check_positive, uniform_in_ball, OracleDistribution, SimRng, SynthError};
use crate::classify::{DensityParams, HolderParams, MarginParams};

/// `X` uniform on `B(0, radius)`, `η(x) = 1/2 − C‖x‖²`.
///
/// `P_X(0 < |η − 1/2| ≤ t) = (t / (C r²))^{d/2}` for `t ≤ C r²`, so the
/// margin exponent is `d/2` with `C₀ = (C r²)^{−d/2}`. The Bayes rule is 0
/// except at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Parabola {
    d: usize,
    coef: f64,
    radius: f64,
}

pub fn make_parabola(d: usize, coef: f64, radius: f64) -> Result<Parabola, SynthError> {
    if d == 0 {
        return Err(SynthError::InvalidParams(
            "dimension must be at least 1".into(),
        ));
    }
    check_positive("C", coef)?;
    check_positive("radius", radius)?;
    if coef * radius * radius > 0.5 {
        return Err(SynthError::RangeViolation(format!(
            "C r^2 = {} exceeds 1/2, so eta is negative near the boundary",
            coef * radius * radius
        )));
    }
    Ok(Parabola { d, coef, radius })
}

impl Parabola {
    pub fn coef(&self) -> f64 {
        self.coef
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Exact `P_X(0 < |η − 1/2| ≤ t)`.
    pub fn margin_profile_exact(&self, t: f64) -> f64 {
        let top = self.coef * self.radius * self.radius;
        (t.max(0.0) / top).min(1.0).powf(self.d as f64 / 2.0)
    }
}

impl OracleDistribution for Parabola {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_x(&self, rng: &mut SimRng, out: &mut [f64]) {
        if self.d == 1 {
            out[0] = rng.random_range(-self.radius..=self.radius);
        } else {
            uniform_in_ball(rng, &vec![0.0; self.d], self.radius, out);
        }
    }

    fn eta(&self, x: &[f64]) -> f64 {
        0.5 - self.coef * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn margin(&self) -> MarginParams {
        let top = self.coef * self.radius * self.radius;
        MarginParams {
            alpha: self.d as f64 / 2.0,
            c0: top.powf(-(self.d as f64) / 2.0),
        }
    }

    /// The first-order Taylor remainder is exactly `C‖x′ − x‖²`.
    fn holder(&self) -> HolderParams {
        HolderParams {
            beta: 2.0,
            lip: self.coef,
        }
    }

    fn density(&self) -> DensityParams {
        let mu = 1.0 / ball_volume(self.d, self.radius);
        DensityParams {
            c0_reg: 0.5f64.powi(self.d as i32),
            r0: self.radius,
            mu_min: mu,
            mu_max: mu,
            support: format!("closed ball of radius {} at the origin", self.radius),
        }
    }

    fn descriptor(&self) -> String {
        "parabola".into()
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("d".into(), self.d.to_string()),
            ("coef".into(), self.coef.to_string()),
            ("radius".into(), self.radius.to_string()),
        ]
    }
}
