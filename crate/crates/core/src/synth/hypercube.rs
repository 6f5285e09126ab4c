//! Hypercube of laws indexed by sign vectors `σ ∈ {−1, +1}^m`.
//!
//! `[0, 1]ᵈ` is split into `qᵈ` cubic cells `X_j` around the grid points
//! `z_j = ((2k₁+1)/(2q), …, (2k_d+1)/(2q))`, listed in row-major order. In
//! the first `m` cells the regression function is
//! `(1 + σ_j q^{−β} φ(q(x − z_j)))/2` with `φ = C_φ u(‖·‖)`; everywhere else
//! it is `1/2`. `P_X` puts mass `w` uniformly on each ball `B(z_j, 1/(4q))`,
//! `j ≤ m`, and the remaining `1 − m w` uniformly on a set `A₀` where the
//! regression function is `1/2`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;

use super::bump::BumpTable;
use super::{ball_volume, check_positive, uniform_in_ball, OracleDistribution, SimRng, SynthError};
use crate::classify::{DensityParams, HolderParams, MarginParams};
use crate::data::Dataset;
use crate::lp::degree_for;

/// All `qᵈ` grid points in row-major order (last coordinate fastest).
pub fn grid_points(q: usize, d: usize) -> Vec<Vec<f64>> {
    assert!(q >= 1 && d >= 1);
    let total = q.pow(d as u32);
    (0..total).map(|j| cell_center(j, q, d)).collect()
}

fn cell_center(mut j: usize, q: usize, d: usize) -> Vec<f64> {
    let mut z = vec![0.0; d];
    for c in z.iter_mut().rev() {
        *c = (2 * (j % q) + 1) as f64 / (2 * q) as f64;
        j /= q;
    }
    z
}

/// Per-coordinate index of the nearest grid abscissa; exact ties go to the
/// smaller index, i.e. toward the origin.
fn nearest_index(v: f64, q: usize) -> usize {
    // nearest integer to q·v − 1/2, rounding halves down
    let k = (q as f64 * v - 1.0).ceil();
    k.clamp(0.0, (q - 1) as f64) as usize
}

/// The grid point `n_q(x)` closest to `x`.
///
/// The grid is a product, so the Euclidean nearest point is found
/// coordinatewise. Ties resolve toward the origin in every tied coordinate,
/// which yields the unique tied candidate of smallest norm; no further tie
/// rule is ever needed.
pub fn nearest_grid(x: &[f64], q: usize) -> Vec<f64> {
    assert!(q >= 1);
    x.iter()
        .map(|&v| (2 * nearest_index(v, q) + 1) as f64 / (2 * q) as f64)
        .collect()
}

/// Row-major index of the cell containing `x`, or `None` outside `[0, 1]ᵈ`.
fn cell_of(x: &[f64], q: usize) -> Option<usize> {
    let mut j = 0;
    for &v in x {
        if !(0.0..=1.0).contains(&v) {
            return None;
        }
        j = j * q + nearest_index(v, q);
    }
    Some(j)
}

/// `|u(‖x′‖) − T_x(x′)|`, where `T_x` is the Taylor polynomial of
/// `v ↦ u(‖v‖)` at `x` of the given degree (at most 2).
pub fn phi_taylor_remainder(x: &[f64], xp: &[f64], degree: u32) -> f64 {
    assert!(
        degree <= 2,
        "Taylor certificates are implemented up to degree 2"
    );
    let rp = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
    (BumpTable::global().eval(rp) - radial_taylor(x, xp, degree)).abs()
}

/// Largest Taylor-remainder ratio `|u(‖x′‖) − T_x(x′)| / ‖x′ − x‖^β` over a
/// deterministic grid of planar configurations. By radial symmetry the
/// remainder only depends on the plane through the origin, `x` and `x′`, so
/// the planar grid covers every dimension.
fn certificate_ratio(beta: f64, radii: usize, angles: usize, scales: &[f64]) -> f64 {
    let degree = degree_for(beta);
    let mut worst = 0.0f64;
    for i in 0..=radii {
        let r = 0.6 * i as f64 / radii as f64;
        for a in 0..=angles {
            let theta = std::f64::consts::PI * a as f64 / angles as f64;
            let (c, s) = (theta.cos(), theta.sin());
            for &h in scales {
                let rem = phi_taylor_remainder(&[r, 0.0], &[r + h * c, h * s], degree);
                worst = worst.max(rem / h.powf(beta));
            }
        }
    }
    worst
}

/// `C_φ` for `φ = C_φ u(‖·‖)` in `Σ(β, L)`: the largest power of two in
/// `[2⁻²⁰, 1]` passing the certificate on pairs at scales `2^{-k}`,
/// `−2 ≤ k ≤ 12`, times 0.9. Cached per `(β, L, d)`.
pub fn calibrate_c_phi(beta: f64, lip: f64, d: usize) -> Result<f64, SynthError> {
    check_positive("beta", beta)?;
    check_positive("L", lip)?;
    if degree_for(beta) > 2 {
        return Err(SynthError::CalibrationFailed { beta, lip });
    }
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, usize), f64>>> = OnceLock::new();
    let key = (beta.to_bits(), lip.to_bits(), d);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&c) = cache.lock().expect("calibration cache poisoned").get(&key) {
        return Ok(c);
    }
    let scales: Vec<f64> = (-2..=12).map(|k| 2f64.powi(-k)).collect();
    let ratio = certificate_ratio(beta, 300, 32, &scales);
    let mut c = 1.0;
    while c * ratio > lip {
        c /= 2.0;
        if c < 2f64.powi(-20) {
            return Err(SynthError::CalibrationFailed { beta, lip });
        }
    }
    let c = 0.9 * c;
    cache
        .lock()
        .expect("calibration cache poisoned")
        .insert(key, c);
    Ok(c)
}

/// Choice of the set `A₀` carrying the mass outside the perturbed balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    /// `A₀ = [0, 1]ᵈ` minus the perturbed cells; density bounded below on
    /// the support.
    Strong,
    /// `A₀` is the ball of radius `1/(2q)` inscribed in the first
    /// unperturbed cell, or in the cell just past `[0, 1]ᵈ` when `m = qᵈ`.
    Mild,
}

/// One vertex of the hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeParams {
    d: usize,
    q: usize,
    m: usize,
    w: f64,
    beta: f64,
    lip: f64,
    c_phi: f64,
    sigma: Vec<i8>,
    mode: DensityMode,
    alpha: f64,
}

impl HypercubeParams {
    /// Validates the grid bookkeeping and calibrates `C_φ` for `(β, L, d)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        q: usize,
        m: usize,
        w: f64,
        beta: f64,
        lip: f64,
        sigma: Vec<i8>,
        mode: DensityMode,
    ) -> Result<Self, SynthError> {
        if d == 0 || q == 0 {
            return Err(SynthError::InvalidParams(format!(
                "need d ≥ 1 and q ≥ 1, got d={d}, q={q}"
            )));
        }
        let cells = (q as u128).checked_pow(d as u32).filter(|&c| c <= 1 << 40);
        let cells = cells
            .ok_or_else(|| SynthError::GridConstraint(format!("q^d = {q}^{d} is too large")))?
            as usize;
        if m == 0 || m > cells {
            return Err(SynthError::GridConstraint(format!(
                "need 1 ≤ m ≤ q^d = {cells}, got m = {m}"
            )));
        }
        if !(w > 0.0 && m as f64 * w <= 1.0 + 1e-12) {
            return Err(SynthError::GridConstraint(format!(
                "need 0 < w ≤ 1/m = {}, got w = {w}",
                1.0 / m as f64
            )));
        }
        if sigma.len() != m || sigma.iter().any(|s| *s != 1 && *s != -1) {
            return Err(SynthError::InvalidParams(format!(
                "sigma must hold {m} entries in {{-1, +1}}"
            )));
        }
        let a0_mass = 1.0 - m as f64 * w;
        match mode {
            DensityMode::Strong if m == cells && a0_mass > 1e-12 => {
                return Err(SynthError::DegenerateSupport(format!(
                    "every cell is perturbed, so A0 is empty but carries mass {a0_mass}"
                )));
            }
            DensityMode::Mild if 1.0 / (2.0 * q as f64) < 1e-6 => {
                return Err(SynthError::DegenerateSupport(format!(
                    "A0 ball radius 1/(2q) = {} is below 1e-6",
                    0.5 / q as f64
                )));
            }
            _ => {}
        }
        let c_phi = calibrate_c_phi(beta, lip, d)?;
        Ok(Self {
            d,
            q,
            m,
            w,
            beta,
            lip,
            c_phi,
            sigma,
            mode,
            alpha: 0.0,
        })
    }

    /// Replaces the calibrated `C_φ` by a smaller value. The Hölder
    /// remainder is linear in `C_φ`, so any value up to the calibrated one
    /// keeps the certificate.
    pub fn with_c_phi(mut self, c_phi: f64) -> Result<Self, SynthError> {
        if !(c_phi > 0.0 && c_phi <= self.c_phi) {
            return Err(SynthError::InvalidParams(format!(
                "C_phi must lie in (0, {}], got {c_phi}",
                self.c_phi
            )));
        }
        self.c_phi = c_phi;
        Ok(self)
    }

    /// Same geometry at another vertex.
    pub fn with_sigma(&self, sigma: Vec<i8>) -> Result<Self, SynthError> {
        if sigma.len() != self.m || sigma.iter().any(|s| *s != 1 && *s != -1) {
            return Err(SynthError::InvalidParams(format!(
                "sigma must hold {} entries in {{-1, +1}}",
                self.m
            )));
        }
        Ok(Self {
            sigma,
            ..self.clone()
        })
    }

    /// Margin exponent reported by [`OracleDistribution::margin`]; `C₀` is
    /// then the smallest constant valid for it.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, SynthError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SynthError::InvalidParams(format!(
                "alpha must be finite and nonnegative, got {alpha}"
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Vertex `v` of the cube, bit `j` of `v` set meaning `σ_j = −1`.
    pub fn vertex(&self, v: u64) -> Self {
        let sigma = (0..self.m)
            .map(|j| if v >> j & 1 == 1 { -1 } else { 1 })
            .collect();
        Self {
            sigma,
            ..self.clone()
        }
    }

    /// Uniformly random vertex.
    pub fn random_vertex(&self, rng: &mut SimRng) -> Self {
        let sigma = (0..self.m)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self {
            sigma,
            ..self.clone()
        }
    }

    /// Grid size, perturbed-cell count and ball mass for sample size `n`
    /// under the strong-density schedule
    /// `q = ⌊C̄ n^{1/(2β+d)}⌋`, `w = C′ q^{−d}`, `m = ⌊C″ q^{d−αβ}⌋`.
    pub fn strong_schedule(
        n: usize,
        alpha: f64,
        beta: f64,
        d: usize,
        c_bar: f64,
        c_w: f64,
        c_m: f64,
    ) -> Result<(usize, usize, f64), SynthError> {
        let q = (c_bar * (n as f64).powf(1.0 / (2.0 * beta + d as f64))).floor();
        if q < 1.0 {
            return Err(SynthError::GridConstraint(format!(
                "schedule gives q = {q} < 1 at n = {n}"
            )));
        }
        let q = q as usize;
        let w = c_w * (q as f64).powi(-(d as i32));
        let m = (c_m * (q as f64).powf(d as f64 - alpha * beta)).floor() as usize;
        Ok((q, m, w))
    }

    /// Mild-density schedule `q = ⌊C n^{1/((2+α)β+d)}⌋`, `w = C′ q^{2β}/n`,
    /// `m = qᵈ`.
    pub fn mild_schedule(
        n: usize,
        alpha: f64,
        beta: f64,
        d: usize,
        c: f64,
        c_w: f64,
    ) -> Result<(usize, usize, f64), SynthError> {
        let q = (c * (n as f64).powf(1.0 / ((2.0 + alpha) * beta + d as f64))).floor();
        if q < 1.0 {
            return Err(SynthError::GridConstraint(format!(
                "schedule gives q = {q} < 1 at n = {n}"
            )));
        }
        let q = q as usize;
        let w = c_w * (q as f64).powf(2.0 * beta) / n as f64;
        Ok((q, q.pow(d as u32), w))
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lip(&self) -> f64 {
        self.lip
    }
    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }
    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }
    pub fn mode(&self) -> DensityMode {
        self.mode
    }

    /// Center of cell `j` (row-major).
    pub fn center(&self, j: usize) -> Vec<f64> {
        cell_center(j, self.q, self.d)
    }

    /// Index of the perturbed cell containing `x`, if any.
    pub fn perturbed_cell(&self, x: &[f64]) -> Option<usize> {
        cell_of(x, self.q).filter(|&j| j < self.m)
    }

    /// Radius `1/(4q)` of the balls carrying mass `w`.
    pub fn ball_radius(&self) -> f64 {
        0.25 / self.q as f64
    }

    /// `b = b′ = C_φ q^{−β}`, the value of `|2η − 1|` on every ball.
    pub fn b(&self) -> f64 {
        self.c_phi * (self.q as f64).powf(-self.beta)
    }

    /// Level `C_φ/(2q^β)` where the margin profile jumps from 0 to `m w`.
    pub fn margin_jump(&self) -> f64 {
        0.5 * self.b()
    }

    fn a0_mass(&self) -> f64 {
        (1.0 - self.m as f64 * self.w).max(0.0)
    }

    fn mild_center(&self) -> Vec<f64> {
        let cells = self.q.pow(self.d as u32);
        if self.m < cells {
            self.center(self.m)
        } else {
            let mut c = vec![0.5 / self.q as f64; self.d];
            c[0] += 1.0;
            c
        }
    }

    fn sample_a0(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self.mode {
            DensityMode::Strong => loop {
                for o in out.iter_mut() {
                    *o = rng.random::<f64>();
                }
                if self.perturbed_cell(out).is_none() {
                    return;
                }
            },
            DensityMode::Mild => {
                uniform_in_ball(rng, &self.mild_center(), 0.5 / self.q as f64, out)
            }
        }
    }

    /// `η_σ(x') − T_x(x')` where `T_x` is the Taylor polynomial of degree
    /// `⌊β⌋` of `η_σ` at `x`.
    pub fn eta_taylor_remainder(&self, x: &[f64], xp: &[f64]) -> f64 {
        let mut taylor = 0.5;
        if let Some(j) = self.perturbed_cell(x) {
            let z = self.center(j);
            let q = self.q as f64;
            let v: Vec<f64> = x.iter().zip(&z).map(|(a, c)| q * (a - c)).collect();
            let vp: Vec<f64> = xp.iter().zip(&z).map(|(a, c)| q * (a - c)).collect();
            taylor += 0.5
                * f64::from(self.sigma[j])
                * self.b()
                * radial_taylor(&v, &vp, degree_for(self.beta));
        }
        hypercube_eta(xp, self) - taylor
    }
}

/// Taylor polynomial of degree ≤ 2 of `v ↦ u(‖v‖)` at `x`, evaluated at
/// `xp`. Uses the gradient `u′(r) x/r` and the Hessian
/// `u″(r) x̂x̂ᵀ + (u′(r)/r)(I − x̂x̂ᵀ)`, both zero on the plateau `r ≤ 1/4`.
fn radial_taylor(x: &[f64], xp: &[f64], degree: u32) -> f64 {
    let table = BumpTable::global();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut t = table.eval(r);
    if degree >= 1 && r > 0.0 {
        let d1 = table.derivative(r);
        let radial: f64 = x.iter().zip(xp).map(|(a, b)| a / r * (b - a)).sum();
        t += d1 * radial;
        if degree >= 2 {
            let d2 = table.second_derivative(r);
            let step2: f64 = x.iter().zip(xp).map(|(a, b)| (b - a) * (b - a)).sum();
            t += 0.5 * (d2 * radial * radial + d1 / r * (step2 - radial * radial));
        }
    }
    t
}

/// `η_σ(x)`.
pub fn hypercube_eta(x: &[f64], p: &HypercubeParams) -> f64 {
    match p.perturbed_cell(x) {
        Some(j) => {
            let z = p.center(j);
            let q = p.q as f64;
            let r = x
                .iter()
                .zip(&z)
                .map(|(a, c)| (q * (a - c)).powi(2))
                .sum::<f64>()
                .sqrt();
            0.5 * (1.0 + f64::from(p.sigma[j]) * p.b() * BumpTable::global().eval(r))
        }
        None => 0.5,
    }
}

/// `n` draws from the vertex `p`.
pub fn sample_hypercube(p: &HypercubeParams, seed: u64, n: usize) -> Dataset {
    p.sample(seed, n)
}

/// `m w b′ (1 − b √(n w)) / 2`, floored at 0: a lower bound on the largest
/// expected excess risk over the vertices, for any classifier trained on
/// `n` samples.
pub fn assouad_bound(p: &HypercubeParams, n: usize) -> f64 {
    let b = p.b();
    let v = p.m as f64 * p.w * b * (1.0 - b * (n as f64 * p.w).sqrt()) / 2.0;
    v.max(0.0)
}

impl OracleDistribution for HypercubeParams {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_x(&self, rng: &mut SimRng, out: &mut [f64]) {
        let in_balls = self.m as f64 * self.w;
        if self.a0_mass() <= 1e-12 || rng.random::<f64>() < in_balls {
            let j = rng.random_range(0..self.m);
            uniform_in_ball(rng, &self.center(j), self.ball_radius(), out);
        } else {
            self.sample_a0(rng, out);
        }
    }

    fn eta(&self, x: &[f64]) -> f64 {
        hypercube_eta(x, self)
    }

    fn margin(&self) -> MarginParams {
        let mass = self.m as f64 * self.w;
        MarginParams {
            alpha: self.alpha,
            c0: (mass / self.margin_jump().powf(self.alpha)).max(f64::MIN_POSITIVE),
        }
    }

    fn holder(&self) -> HolderParams {
        HolderParams {
            beta: self.beta,
            lip: self.lip,
        }
    }

    fn density(&self) -> DensityParams {
        let ball = self.w / ball_volume(self.d, self.ball_radius());
        let cells = self.q.pow(self.d as u32);
        let a0 = if self.a0_mass() <= 1e-12 {
            None
        } else {
            Some(match self.mode {
                DensityMode::Strong => self.a0_mass() / (1.0 - self.m as f64 / cells as f64),
                DensityMode::Mild => self.a0_mass() / ball_volume(self.d, 0.5 / self.q as f64),
            })
        };
        let mu_max = a0.map_or(ball, |v| v.max(ball));
        let mu_min = match self.mode {
            DensityMode::Strong => a0.map_or(ball, |v| v.min(ball)),
            DensityMode::Mild => 0.0,
        };
        let support = match self.mode {
            DensityMode::Strong => "balls B(z_j, 1/(4q)) for j < m, plus [0,1]^d minus the perturbed cells",
            DensityMode::Mild => "balls B(z_j, 1/(4q)) for j < m, plus one ball of radius 1/(2q) in an unperturbed cell",
        };
        DensityParams {
            c0_reg: 0.5f64.powi(self.d as i32),
            r0: self.ball_radius(),
            mu_min,
            mu_max,
            support: support.into(),
        }
    }

    fn descriptor(&self) -> String {
        "hypercube".into()
    }

    fn parameters(&self) -> Vec<(String, String)> {
        let sigma: Vec<String> = self.sigma.iter().map(|s| s.to_string()).collect();
        vec![
            ("d".into(), self.d.to_string()),
            ("q".into(), self.q.to_string()),
            ("m".into(), self.m.to_string()),
            ("w".into(), self.w.to_string()),
            ("beta".into(), self.beta.to_string()),
            ("lip".into(), self.lip.to_string()),
            ("c_phi".into(), self.c_phi.to_string()),
            ("mode".into(), format!("{:?}", self.mode).to_lowercase()),
            ("sigma".into(), sigma.join(" ")),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn params(m: usize, w: f64, mode: DensityMode) -> HypercubeParams {
        HypercubeParams::new(1, 4, m, w, 1.0, 50.0, vec![1; m], mode).unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid_points(1, 1), vec![vec![0.5]]);
        assert_eq!(grid_points(2, 1), vec![vec![0.25], vec![0.75]]);
        assert_eq!(
            grid_points(2, 2),
            vec![
                vec![0.25, 0.25],
                vec![0.25, 0.75],
                vec![0.75, 0.25],
                vec![0.75, 0.75]
            ]
        );
        assert_eq!(grid_points(3, 3).len(), 27);
    }

    #[test]
    fn nearest_grid_examples() {
        assert_eq!(nearest_grid(&[0.3], 2), vec![0.25]);
        assert_eq!(nearest_grid(&[0.5], 2), vec![0.25]);
        assert_eq!(nearest_grid(&[0.75], 2), vec![0.75]);
        assert_eq!(nearest_grid(&[0.5, 0.5], 2), vec![0.25, 0.25]);
        for z in grid_points(5, 2) {
            assert_eq!(nearest_grid(&z, 5), z);
        }
        // brute force against all grid points
        let grid = grid_points(3, 2);
        for i in 0..=30 {
            for j in 0..=30 {
                let x = [i as f64 / 30.0, j as f64 / 30.0];
                let dist = |z: &Vec<f64>| (z[0] - x[0]).powi(2) + (z[1] - x[1]).powi(2);
                let best = grid.iter().map(dist).fold(f64::INFINITY, f64::min);
                let n = nearest_grid(&x, 3);
                assert!((dist(&n) - best).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eta_examples() {
        let p = HypercubeParams::new(
            2,
            3,
            4,
            0.1,
            1.0,
            50.0,
            vec![1, -1, 1, 1],
            DensityMode::Strong,
        )
        .unwrap();
        let z0 = p.center(0);
        assert!((hypercube_eta(&z0, &p) - (0.5 + 0.5 * p.c_phi() / 3.0)).abs() < 1e-15);
        let z1 = p.center(1);
        assert!((hypercube_eta(&z1, &p) - (0.5 - 0.5 * p.c_phi() / 3.0)).abs() < 1e-15);
        // cell 5 is unperturbed, and points off the cube are in X₀
        assert_eq!(hypercube_eta(&p.center(5), &p), 0.5);
        assert_eq!(hypercube_eta(&[1.5, 0.2], &p), 0.5);
        // beyond distance 1/(2q) from a perturbed center, inside its cell
        assert_eq!(hypercube_eta(&[z0[0] + 0.1, z0[1] + 0.13], &p), 0.5);
        assert_eq!(hypercube_eta(&[z0[0] + 0.13, z0[1] + 0.13], &p), 0.5);
        assert_eq!(p.perturbed_cell(&[z0[0] + 0.13, z0[1] + 0.13]), Some(0));
    }

    #[test]
    fn calibration_caps_and_is_recertified_on_a_finer_grid() {
        assert_eq!(calibrate_c_phi(1.0, 1e6, 1).unwrap(), 0.9);
        for &(beta, lip) in &[
            (1.0, 1.0),
            (0.5, 2.0),
            (1.5, 3.0),
            (2.0, 100.0),
            (3.0, 20.0),
        ] {
            let c = calibrate_c_phi(beta, lip, 2).unwrap();
            assert!(c > 0.0 && c <= 0.9);
            // twice the radial and angular resolution, half-octave scales
            let scales: Vec<f64> = (-4..=26).map(|k| 2f64.powf(-k as f64 / 2.0)).collect();
            let ratio = certificate_ratio(beta, 600, 64, &scales);
            assert!(c * ratio <= lip, "beta={beta} L={lip}: {}", c * ratio);
            // random pairs in three dimensions
            let mut rng = SimRng::seed_from_u64(9);
            for _ in 0..20_000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-0.6..0.6)).collect();
                let h = 2f64.powf(-rng.random_range(0.0..14.0));
                let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, v)| a + h * v / norm).collect();
                assert!(
                    c * phi_taylor_remainder(&x, &xp, degree_for(beta))
                        <= lip * h.powf(beta) * (1.0 + 1e-9)
                );
            }
        }
        assert!(matches!(
            calibrate_c_phi(3.5, 1.0, 1),
            Err(SynthError::CalibrationFailed { .. })
        ));
    }

    #[test]
    fn phi_at_origin_is_c_phi() {
        let p = params(4, 0.25, DensityMode::Strong);
        assert_eq!(p.b(), p.c_phi() / 4.0);
        assert_eq!(hypercube_eta(&p.center(2), &p), 0.5 + 0.5 * p.b());
    }

    #[test]
    fn construction_errors() {
        let sigma = |m| vec![1i8; m];
        assert!(matches!(
            HypercubeParams::new(1, 2, 3, 0.1, 1.0, 1.0, sigma(3), DensityMode::Strong),
            Err(SynthError::GridConstraint(_))
        ));
        assert!(matches!(
            HypercubeParams::new(1, 4, 2, 0.6, 1.0, 1.0, sigma(2), DensityMode::Strong),
            Err(SynthError::GridConstraint(_))
        ));
        assert!(matches!(
            HypercubeParams::new(1, 4, 4, 0.1, 1.0, 1.0, sigma(4), DensityMode::Strong),
            Err(SynthError::DegenerateSupport(_))
        ));
        assert!(matches!(
            HypercubeParams::new(1, 4_000_000, 1, 0.1, 1.0, 1.0, sigma(1), DensityMode::Mild),
            Err(SynthError::DegenerateSupport(_))
        ));
        assert!(
            HypercubeParams::new(1, 4, 4, 0.25, 1.0, 1.0, sigma(4), DensityMode::Strong).is_ok()
        );
        assert!(
            HypercubeParams::new(1, 4, 2, 0.1, 1.0, 1.0, vec![1, 0], DensityMode::Strong).is_err()
        );
    }

    #[test]
    fn assouad_bound_examples() {
        let p = HypercubeParams::new(1, 4, 4, 0.125, 1.0, 50.0, vec![1; 4], DensityMode::Mild)
            .unwrap()
            .with_c_phi(0.5)
            .unwrap();
        // b = b′ = 0.125, √(n w) = 1
        let v = assouad_bound(&p, 8);
        assert!((v - 4.0 * 0.125 * 0.125 * (1.0 - 0.125) / 2.0).abs() < 1e-15);
        assert!((v - 0.02734375).abs() < 1e-15);
        // the largest excess any rule can reach is m w b′ = 0.0625, so a bound
        // without the ball mass w (0.21875 here) could not hold
        assert!(v <= 4.0 * 0.125 * 0.125);
        assert!(0.21875 > 4.0 * 0.125 * 0.125);
        // b √(n w) ≥ 1
        assert_eq!(assouad_bound(&p, 512), 0.0);
        // small n w approaches m w b′ / 2
        let tiny = HypercubeParams::new(1, 4, 4, 1e-12, 1.0, 50.0, vec![1; 4], DensityMode::Mild)
            .unwrap()
            .with_c_phi(0.5)
            .unwrap();
        assert!((assouad_bound(&tiny, 1) / (4.0 * 1e-12 * 0.125 / 2.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn assouad_bound_is_monotone() {
        let base = |w: f64| {
            HypercubeParams::new(1, 4, 4, w, 1.0, 50.0, vec![1; 4], DensityMode::Mild).unwrap()
        };
        let p = base(1.0 / 64.0);
        let mut prev = f64::INFINITY;
        for n in [1, 4, 16, 64, 256, 1024, 4096] {
            let v = assouad_bound(&p, n);
            assert!(v <= prev);
            prev = v;
        }
        // nonincreasing in w at fixed n once b √(n w) ≥ 2/3
        let n = 64;
        let mut prev = f64::INFINITY;
        for w in [0.2, 0.22, 0.24, 0.25] {
            let v = assouad_bound(&base(w), n);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn ball_masses_and_labels() {
        let p = HypercubeParams::new(
            2,
            3,
            5,
            0.05,
            1.0,
            50.0,
            vec![1, -1, 1, -1, 1],
            DensityMode::Strong,
        )
        .unwrap();
        let n = 200_000;
        let data = p.sample(17, n);
        let mut counts = vec![0usize; 5];
        let mut ones = vec![0usize; 5];
        for i in 0..n {
            let x = crate::data::Observations::point(&data, i);
            if let Some(j) = p.perturbed_cell(x) {
                let z = p.center(j);
                let r = ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2)).sqrt();
                assert!(
                    r <= p.ball_radius() * (1.0 + 1e-12),
                    "perturbed cells only carry their balls"
                );
                counts[j] += 1;
                ones[j] += usize::from(data.label(i));
            }
        }
        for j in 0..5 {
            let frac = counts[j] as f64 / n as f64;
            assert!(
                (frac - 0.05).abs() <= 3.0 * (0.05 * 0.95 / n as f64).sqrt(),
                "cell {j}: {frac}"
            );
            let eta = hypercube_eta(&p.center(j), &p);
            let mean = ones[j] as f64 / counts[j] as f64;
            assert!(
                (mean - eta).abs() <= 3.0 * (eta * (1.0 - eta) / counts[j] as f64).sqrt(),
                "cell {j}: {mean} vs {eta}"
            );
        }
    }

    #[test]
    fn full_mass_on_balls() {
        let p = params(4, 0.25, DensityMode::Strong);
        let data = p.sample(3, 2000);
        for x in data.points() {
            assert!(p.perturbed_cell(x).is_some());
        }
        let m = params(4, 0.25, DensityMode::Mild);
        assert!(m
            .sample(3, 2000)
            .points()
            .all(|x| m.perturbed_cell(x).is_some()));
    }

    #[test]
    fn mild_a0_ball() {
        let p = params(4, 0.125, DensityMode::Mild);
        let data = p.sample(5, 5000);
        let outside = data
            .points()
            .filter(|x| p.perturbed_cell(x).is_none())
            .count();
        assert!(outside > 0);
        for x in data.points().filter(|x| p.perturbed_cell(x).is_none()) {
            // center (1 + 1/8), radius 1/8
            assert!((x[0] - 1.125).abs() <= 0.125 + 1e-12);
            assert_eq!(hypercube_eta(x, &p), 0.5);
        }
        let dens = p.density();
        assert_eq!(dens.mu_min, 0.0);
        assert!(!dens.is_strong());
    }

    #[test]
    fn strong_density_is_piecewise_constant() {
        let p =
            HypercubeParams::new(1, 5, 2, 0.1, 1.0, 50.0, vec![1, 1], DensityMode::Strong).unwrap();
        let dens = p.density();
        // balls: 0.1 / 0.1 = 1; A₀: 0.8 / 0.6
        assert!((dens.mu_min - 1.0).abs() < 1e-12);
        assert!((dens.mu_max - 0.8 / 0.6).abs() < 1e-12);
        let n = 400_000;
        let data = p.sample(8, n);
        // histogram on 50 bins; bins fully inside one density piece match it
        let bins = 50;
        let mut hist = vec![0usize; bins];
        for x in data.points() {
            hist[((x[0] * bins as f64) as usize).min(bins - 1)] += 1;
        }
        for (b, &c) in hist.iter().enumerate() {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            let mid = 0.5 * (lo + hi);
            let expected_density = match p.perturbed_cell(&[mid]) {
                Some(j) => {
                    let z = p.center(j)[0];
                    if hi <= z + p.ball_radius() && lo >= z - p.ball_radius() {
                        1.0
                    } else if lo >= z + p.ball_radius() || hi <= z - p.ball_radius() {
                        0.0
                    } else {
                        continue;
                    }
                }
                None if p.perturbed_cell(&[lo]).is_none() && p.perturbed_cell(&[hi]).is_none() => {
                    0.8 / 0.6
                }
                None => continue,
            };
            let prob = expected_density / bins as f64;
            let est = c as f64 / n as f64;
            assert!(
                (est - prob).abs() <= 3.5 * (prob * (1.0 - prob) / n as f64).sqrt() + 1e-12,
                "bin {b}: {est} vs {prob}"
            );
        }
    }

    #[test]
    fn schedules() {
        // n = 1000, β = 1, d = 1: 1.01 · n^{1/3} = 10.1
        let (q, m, w) =
            HypercubeParams::strong_schedule(1000, 0.0, 1.0, 1, 1.01, 0.5, 1.0).unwrap();
        assert_eq!((q, m), (10, 10));
        assert!((w - 0.05).abs() < 1e-15);
        let (q, m, w) = HypercubeParams::mild_schedule(1024, 1.0, 1.0, 2, 1.01, 0.5).unwrap();
        // 1.01 · 1024^{1/5} = 4.04
        assert_eq!((q, m), (4, 16));
        assert!((w - 0.5 * 16.0 / 1024.0).abs() < 1e-15);
        assert!(HypercubeParams::strong_schedule(2, 0.0, 1.0, 1, 0.1, 0.5, 1.0).is_err());
    }
}
