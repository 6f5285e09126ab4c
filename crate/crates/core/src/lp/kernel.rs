use std::f64::consts::PI;

/// Radial smoothing kernels on ℝᵈ.
///
/// Both kernels integrate to one, are bounded with compact support or
/// Gaussian decay (so every polynomial moment of `K` and `K²` is finite), and
/// dominate `c·1{‖u‖ ≤ c}` for the constant returned by
/// [`KernelSpec::floor_constant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `K(u) = (2π)^{-d/2} exp(-‖u‖²/2)`.
    GaussianRadial,
    /// `K(u) = 1{‖u‖ ≤ radius} / λ[B(0, radius)]`.
    UniformBall { radius: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::GaussianRadial
    }
}

/// Lebesgue volume of the unit ball in ℝᵈ.
pub fn unit_ball_volume(d: usize) -> f64 {
    // v_d = v_{d-2} · 2π / d
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

impl KernelSpec {
    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.eval_radial(u.len(), u.iter().map(|v| v * v).sum())
    }

    /// Kernel value from the squared norm `r2 = ‖u‖²` in dimension `d`.
    #[inline]
    pub fn eval_radial(&self, d: usize, r2: f64) -> f64 {
        match *self {
            KernelSpec::GaussianRadial => (2.0 * PI).powf(-(d as f64) / 2.0) * (-0.5 * r2).exp(),
            KernelSpec::UniformBall { radius } => {
                if r2 <= radius * radius {
                    1.0 / (unit_ball_volume(d) * radius.powi(d as i32))
                } else {
                    0.0
                }
            }
        }
    }

    /// Normalizing factor `K(0)` hoisted out of per-point loops.
    pub(crate) fn peak(&self, d: usize) -> f64 {
        self.eval_radial(d, 0.0)
    }

    /// Support radius, or `None` for infinite support.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            KernelSpec::GaussianRadial => None,
            KernelSpec::UniformBall { radius } => Some(radius),
        }
    }

    /// A constant `c > 0` with `K(u) ≥ c` whenever `‖u‖ ≤ c`.
    ///
    /// Gaussian: `0.1` when it qualifies (d ≤ 2), otherwise half the peak
    /// `(2π)^{-d/2}`, which qualifies because `exp(-c²/2) ≥ 1/2` for `c < 1`.
    pub fn floor_constant(&self, d: usize) -> f64 {
        match *self {
            KernelSpec::GaussianRadial => {
                let peak = self.peak(d);
                if peak * (-0.005f64).exp() >= 0.1 {
                    0.1
                } else {
                    0.5 * peak
                }
            }
            KernelSpec::UniformBall { radius } => radius.min(self.peak(d)),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            KernelSpec::GaussianRadial => true,
            KernelSpec::UniformBall { radius } => radius.is_finite() && radius > 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn floor_constant_is_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [
            KernelSpec::GaussianRadial,
            KernelSpec::UniformBall { radius: 1.0 },
            KernelSpec::UniformBall { radius: 0.3 },
        ] {
            for d in 1..=5 {
                let c = k.floor_constant(d);
                assert!(c > 0.0);
                for _ in 0..2000 {
                    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-c..c)).collect();
                    if u.iter().map(|v| v * v).sum::<f64>() <= c * c {
                        assert!(k.eval(&u) >= c, "{k:?} d={d}");
                    }
                }
                // on the sphere of radius c itself
                let mut u = vec![0.0; d];
                u[0] = c;
                assert!(k.eval(&u) >= c);
            }
        }
    }

    #[test]
    fn kernels_integrate_to_one() {
        // Gaussian: importance sampling from N(0, s² I), s = 1.05, weight bounded by s^d.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = 1.05f64;
        for d in 1..=3 {
            let n = 1_000_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let z: Vec<f64> = (0..d)
                    .map(|_| s * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let r2: f64 = z.iter().map(|v| v * v).sum();
                let g = (2.0 * PI * s * s).powf(-(d as f64) / 2.0) * (-0.5 * r2 / (s * s)).exp();
                acc += KernelSpec::GaussianRadial.eval(&z) / g;
            }
            assert!((acc / n as f64 - 1.0).abs() < 1e-3, "gaussian d={d}");
        }
        // Uniform ball: jittered-stratified draws on the enclosing cube.
        for d in 1..=3usize {
            let r = 0.7;
            let k = KernelSpec::UniformBall { radius: r };
            let g = (1_000_000f64).powf(1.0 / d as f64).round() as usize;
            let cells = g.pow(d as u32);
            let mut acc = 0.0;
            let mut u = vec![0.0; d];
            for idx in 0..cells {
                let mut rem = idx;
                for c in u.iter_mut() {
                    let k = rem % g;
                    rem /= g;
                    *c = -r + 2.0 * r * (k as f64 + rng.random::<f64>()) / g as f64;
                }
                acc += k.eval(&u);
            }
            let est = acc / cells as f64 * (2.0 * r).powi(d as i32);
            assert!((est - 1.0).abs() < 1e-3, "uniform d={d}: {est}");
        }
    }
}
