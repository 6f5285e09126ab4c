//! The smooth cutoff `u`: equal to 1 on `[0, 1/4]`, 0 on `[1/2, ∞)`,
//! built from `u₁(t) = exp(−1/((1/2 − t)(t − 1/4)))` on `(1/4, 1/2)` as
//! `u(t) = ∫_t^{1/2} u₁ / ∫_{1/4}^{1/2} u₁`.
//!
//! `u₁` peaks at `e^{−64}`, so everything is computed with the rescaled
//! `exp(64 − 1/g)`, which leaves the ratio unchanged.

use std::sync::OnceLock;

/// Number of table intervals on `[0, 1/2]`.
pub const TABLE_INTERVALS: usize = 4096;
const STEP: f64 = 0.5 / TABLE_INTERVALS as f64;
const QUAD_TOL: f64 = 1e-10;

fn gap(t: f64) -> f64 {
    (0.5 - t) * (t - 0.25)
}

/// `e^{64} u₁(t)`.
pub fn u1_scaled(t: f64) -> f64 {
    if t <= 0.25 || t >= 0.5 {
        return 0.0;
    }
    (64.0 - 1.0 / gap(t)).exp()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Tabulated `u` with monotone cubic Hermite interpolation.
#[derive(Debug)]
pub struct BumpTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
    norm: f64,
}

impl BumpTable {
    fn build() -> Self {
        let n = TABLE_INTERVALS;
        let first = n / 2; // node at t = 1/4
        let mut cumulative = vec![0.0; n + 1];
        for i in (first..n).rev() {
            let (a, b) = (i as f64 * STEP, (i + 1) as f64 * STEP);
            // each slice carries at most STEP · 1 of the rescaled mass
            cumulative[i] = cumulative[i + 1] + adaptive_simpson(u1_scaled, a, b, QUAD_TOL * STEP);
        }
        let norm = cumulative[first];
        let mut values = vec![1.0; n + 1];
        for i in first..=n {
            values[i] = cumulative[i] / norm;
        }
        values[first] = 1.0;
        values[n] = 0.0;
        let mut slopes: Vec<f64> = (0..=n)
            .map(|i| -u1_scaled(i as f64 * STEP) / norm)
            .collect();
        // Fritsch–Carlson limiter
        for k in 0..n {
            let delta = (values[k + 1] - values[k]) / STEP;
            if delta == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let (a, b) = (slopes[k] / delta, slopes[k + 1] / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let s = 3.0 / r.sqrt();
                slopes[k] = s * a * delta;
                slopes[k + 1] = s * b * delta;
            }
        }
        Self {
            values,
            slopes,
            norm,
        }
    }

    /// The shared table, built on first use.
    pub fn global() -> &'static BumpTable {
        static TABLE: OnceLock<BumpTable> = OnceLock::new();
        TABLE.get_or_init(BumpTable::build)
    }

    /// `∫_{1/4}^{1/2} e^{64} u₁`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    /// Tabulated node values `u(i / (2 · TABLE_INTERVALS))`.
    pub fn nodes(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.25 {
            return 1.0;
        }
        if t >= 0.5 {
            return 0.0;
        }
        let pos = t / STEP;
        let k = (pos.floor() as usize).min(TABLE_INTERVALS - 1);
        let s = pos - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let delta = y1 - y0;
        if delta == 0.0 {
            return y0;
        }
        // y0 + Δ·P(s) with P increasing from 0 to 1, so that rounding
        // cannot break monotonicity where Δ is tiny
        let (a, b) = (
            self.slopes[k] * STEP / delta,
            self.slopes[k + 1] * STEP / delta,
        );
        let s2 = s * s;
        let s3 = s2 * s;
        let shape = 3.0 * s2 - 2.0 * s3 + a * (s3 - 2.0 * s2 + s) + b * (s3 - s2);
        let v = y0 + delta * shape;
        v.clamp(0.0, 1.0)
    }

    /// `u′(t) = −u₁(t)/∫u₁`, exact.
    pub fn derivative(&self, t: f64) -> f64 {
        -u1_scaled(t) / self.norm
    }

    /// `u″(t) = −u₁′(t)/∫u₁` with `u₁′ = u₁ · g′/g²`, `g = (1/2 − t)(t − 1/4)`.
    pub fn second_derivative(&self, t: f64) -> f64 {
        if t <= 0.25 || t >= 0.5 {
            return 0.0;
        }
        let g = gap(t);
        -u1_scaled(t) * (0.75 - 2.0 * t) / (g * g) / self.norm
    }
}

/// `u(t)` for `t ≥ 0`.
pub fn bump_u(t: f64) -> f64 {
    BumpTable::global().eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite 8-point Gauss–Legendre rule.
    fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 4] = [
            0.1834346424956498,
            0.5255324099163290,
            0.7966664774136267,
            0.9602898564975363,
        ];
        const W: [f64; 4] = [
            0.3626837833783620,
            0.3137066458778873,
            0.2223810344533745,
            0.1012285362903763,
        ];
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let c = a + (p as f64 + 0.5) * h;
            for (x, w) in X.iter().zip(&W) {
                acc += w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x));
            }
        }
        acc * 0.5 * h
    }

    #[test]
    fn plateau_and_tail_are_exact() {
        assert_eq!(bump_u(0.0), 1.0);
        assert_eq!(bump_u(0.2), 1.0);
        assert_eq!(bump_u(0.25), 1.0);
        assert_eq!(bump_u(0.5), 0.0);
        assert_eq!(bump_u(0.6), 0.0);
    }

    #[test]
    fn midpoint_matches_quadrature() {
        let oracle = gauss_legendre(u1_scaled, 0.375, 0.5, 4000)
            / gauss_legendre(u1_scaled, 0.25, 0.5, 8000);
        assert!(
            (bump_u(0.375) - oracle).abs() < 1e-10,
            "{} vs {oracle}",
            bump_u(0.375)
        );
        // u₁ is symmetric about 3/8
        assert!((bump_u(0.375) - 0.5).abs() < 1e-10);
        for t in [0.27, 0.31, 0.3337, 0.41, 0.4711] {
            let oracle = gauss_legendre(u1_scaled, t, 0.5, 4000)
                / gauss_legendre(u1_scaled, 0.25, 0.5, 8000);
            assert!(
                (bump_u(t) - oracle).abs() < 1e-9,
                "t={t}: {} vs {oracle}",
                bump_u(t)
            );
        }
    }

    #[test]
    fn monotone_and_bounded() {
        let table = BumpTable::global();
        assert!(table.nodes().len() > 4096);
        let mut prev = 1.0;
        for i in 0..=100_000 {
            let v = bump_u(0.6 * i as f64 / 100_000.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(
                v <= prev,
                "t={} v={v} prev={prev}",
                0.6 * i as f64 / 100_000.0
            );
            prev = v;
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let table = BumpTable::global();
        for t in [0.3, 0.35, 0.375, 0.42, 0.46] {
            let h = 1e-6;
            let fd = (bump_u(t + h) - bump_u(t - h)) / (2.0 * h);
            assert!((fd - table.derivative(t)).abs() < 1e-5 * table.derivative(t).abs().max(1.0));
            let fd2 = (table.derivative(t + h) - table.derivative(t - h)) / (2.0 * h);
            assert!(
                (fd2 - table.second_derivative(t)).abs()
                    < 1e-5 * table.second_derivative(t).abs().max(1.0)
            );
        }
    }
}
