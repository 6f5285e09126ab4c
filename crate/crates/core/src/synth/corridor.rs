use rand::Rng;

use super::{check_positive, OracleDistribution, SimRng, SynthError};
use crate::classify::{DensityParams, HolderParams, MarginParams};

/// `X` uniform on `[−1, 1]ᵈ` minus the band `|x₁| < gap/2`, with a Lipschitz
/// regression function depending on `x₁` only.
///
/// With `a = (t₀ + 1/2)/2`, `η − 1/2` rises linearly from `−a` to `a`
/// across the band and then moves away from `1/2` with slope
/// `κ = (1/2 − a)/(2 − gap)` on each side, reaching `±(1/2 + a)/2` at
/// `|x₁| = 1`. Outside the band `|η − 1/2| ≥ a > t₀`, so
/// `P_X(0 < |η − 1/2| ≤ t₀) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    d: usize,
    t0: f64,
    gap: f64,
    level: f64,
    slope: f64,
}

pub fn make_corridor(d: usize, t0: f64, gap: f64) -> Result<Corridor, SynthError> {
    if d == 0 {
        return Err(SynthError::InvalidParams(
            "dimension must be at least 1".into(),
        ));
    }
    if !(t0 > 0.0 && t0 < 0.5) {
        return Err(SynthError::InvalidParams(format!(
            "t0 must lie in (0, 1/2), got {t0}"
        )));
    }
    check_positive("gap width", gap)?;
    if gap >= 2.0 {
        return Err(SynthError::InvalidParams(format!(
            "gap width must be below 2, got {gap}"
        )));
    }
    let level = 0.5 * (t0 + 0.5);
    let slope = (0.5 - level) * 0.5 / (1.0 - 0.5 * gap);
    Ok(Corridor {
        d,
        t0,
        gap,
        level,
        slope,
    })
}

impl Corridor {
    /// Every `t ≤ t₀` has zero margin mass.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Smallest value of `|η − 1/2|` on the support.
    pub fn level(&self) -> f64 {
        self.level
    }
}

impl OracleDistribution for Corridor {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_x(&self, rng: &mut SimRng, out: &mut [f64]) {
        let half = 0.5 * self.gap;
        let v = rng.random_range(0.0..2.0 - self.gap);
        out[0] = if v < 1.0 - half {
            -1.0 + v
        } else {
            half + (v - (1.0 - half))
        };
        for o in out[1..].iter_mut() {
            *o = rng.random_range(-1.0..=1.0);
        }
    }

    fn eta(&self, x: &[f64]) -> f64 {
        let half = 0.5 * self.gap;
        let x1 = x[0].clamp(-1.0, 1.0);
        let psi = if x1.abs() < half {
            self.level * x1 / half
        } else {
            x1.signum() * (self.level + self.slope * (x1.abs() - half))
        };
        0.5 + psi
    }

    /// `α = ∞`: no mass at all within `t₀` of the decision level.
    fn margin(&self) -> MarginParams {
        MarginParams {
            alpha: f64::INFINITY,
            c0: 1.0,
        }
    }

    fn holder(&self) -> HolderParams {
        HolderParams {
            beta: 1.0,
            lip: (2.0 * self.level / self.gap).max(self.slope),
        }
    }

    fn density(&self) -> DensityParams {
        let mu = 1.0 / (2f64.powi(self.d as i32 - 1) * (2.0 - self.gap));
        DensityParams {
            c0_reg: 0.5f64.powi(self.d as i32),
            r0: 1.0 - 0.5 * self.gap,
            mu_min: mu,
            mu_max: mu,
            support: format!("[-1,1]^{} minus the band |x1| < {}", self.d, 0.5 * self.gap),
        }
    }

    fn descriptor(&self) -> String {
        "corridor".into()
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("d".into(), self.d.to_string()),
            ("t0".into(), self.t0.to_string()),
            ("gap".into(), self.gap.to_string()),
        ]
    }
}
