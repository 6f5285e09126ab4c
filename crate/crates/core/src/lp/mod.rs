//! Local polynomial regression of order `l` and the eigenvalue-guarded,
//! clipped estimator used by the plug-in classifier.
//!
//! For a query `x` the estimator fits, by kernel-weighted least squares, a
//! polynomial of degree `l` in `X_i - x` and reports its constant
//! coefficient. The normal equations are assembled in the bandwidth-rescaled
//! form
//!
//! ```text
//! B̄_{s1,s2} = (1/(n hᵈ)) Σ_i ((X_i - x)/h)^{s1+s2} K((X_i - x)/h)
//! r_s       = (1/(n hᵈ)) Σ_i Y_i ((X_i - x)/h)^s K((X_i - x)/h)
//! ```
//!
//! whose solution is `h^{|s|} T_s` where `T = Q⁻¹V` solves the raw system, so
//! the constant coefficient is the same on both routes while `B̄` stays well
//! scaled as `h → 0`. The smallest eigenvalue of `B̄` gates the clipped
//! estimator [`eta_star`].

mod kernel;

pub use kernel::{unit_ball_volume, KernelSpec};

use thiserror::Error;

use crate::data::Observations;
use crate::numkit::{min_eigenvalue, solve_sym, SymMatrix};

/// `λ_min(B̄)` at or below this value means the least-squares problem has no
/// unique minimizer.
pub const UNIQUENESS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("smoothness beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid kernel: {0:?}")]
    InvalidKernel(KernelSpec),
    #[error("sample size {0} is below 3; the (log n)^-1 eigenvalue threshold is degenerate")]
    InvalidSampleSize(usize),
    #[error("query has {got} coordinates, data dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Exponent vector `s = (s₁, …, s_d)` of a monomial `u^s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|s| = Σ sᵢ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `s! = s₁! ⋯ s_d!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (1..=c).map(f64::from).product::<f64>())
            .product()
    }

    /// `u^s`, with `0⁰ = 1`.
    pub fn monomial(&self, u: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(u)
            .map(|(&c, &v)| v.powi(c as i32))
            .product()
    }
}

/// All multi-indices with `|s| ≤ l` in dimension `d`, graded: by total order
/// first, then by descending exponent of the first coordinate, second, and
/// so on (`(1,0)` before `(0,1)`). The first entry is always the zero index.
pub fn multi_index_basis(l: u32, d: usize) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            fill(prefix, remaining - first, slots - 1, out);
            prefix.pop();
        }
    }
    assert!(d >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    for total in 0..=l {
        fill(&mut Vec::with_capacity(d), total, d, &mut out);
    }
    out
}

/// Largest integer strictly below `beta`.
pub fn degree_for(beta: f64) -> u32 {
    (beta.ceil() as u32).saturating_sub(1)
}

/// Settings of the LP(⌊β⌋) estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    beta: f64,
    degree: u32,
    bandwidth: f64,
    kernel: KernelSpec,
    sample_size_hint: Option<usize>,
}

impl LpConfig {
    pub fn new(beta: f64, bandwidth: f64, kernel: KernelSpec) -> Result<Self, LpError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LpError::InvalidBeta(beta));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(LpError::InvalidBandwidth(bandwidth));
        }
        if !kernel.is_valid() {
            return Err(LpError::InvalidKernel(kernel));
        }
        Ok(Self {
            beta,
            degree: degree_for(beta),
            bandwidth,
            kernel,
            sample_size_hint: None,
        })
    }

    /// Sample size used for the `(log n)⁻¹` threshold; defaults to the size
    /// of the dataset being fitted.
    pub fn with_sample_size_hint(mut self, n: usize) -> Self {
        self.sample_size_hint = Some(n);
        self
    }

    pub fn with_bandwidth(mut self, h: f64) -> Result<Self, LpError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LpError::InvalidBandwidth(h));
        }
        self.bandwidth = h;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }
    pub fn sample_size_hint(&self) -> Option<usize> {
        self.sample_size_hint
    }
}

/// `c_h · n^{-1/(2β+d)}`.
pub fn default_bandwidth(n: usize, beta: f64, d: usize, c_h: f64) -> f64 {
    c_h * (n as f64).powf(-1.0 / (2.0 * beta + d as f64))
}

/// The assembled rescaled system at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    pub query: Vec<f64>,
    pub basis: Vec<MultiIndex>,
    pub bbar: SymMatrix,
    pub rhs: Vec<f64>,
    pub lambda_min: f64,
}

impl LocalFit {
    /// Constant coefficient of the fitted polynomial, or 0 when the
    /// least-squares minimizer is not unique.
    pub fn constant_coefficient(&self) -> f64 {
        if self.lambda_min <= UNIQUENESS_TOL {
            return 0.0;
        }
        solve_sym(&self.bbar, &self.rhs)
            .map(|t| t[0])
            .unwrap_or(0.0)
    }
}

fn check_dim<O: Observations + ?Sized>(data: &O, x: &[f64]) -> Result<(), LpError> {
    if x.len() != data.dim() {
        return Err(LpError::DimensionMismatch {
            expected: data.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Visits every sample with nonzero kernel weight, passing the rescaled
/// offset `u = (X_i - x)/h`, the kernel weight `K(u)` and the response.
fn for_each_weighted<O, F>(data: &O, x: &[f64], cfg: &LpConfig, mut f: F)
where
    O: Observations + ?Sized,
    F: FnMut(&[f64], f64, f64),
{
    let d = data.dim();
    let h = cfg.bandwidth;
    let peak = cfg.kernel.peak(d);
    let cutoff2 = cfg.kernel.support_radius().map(|r| r * r);
    let mut u = vec![0.0; d];
    for i in 0..data.len() {
        let p = data.point(i);
        let mut r2 = 0.0;
        for k in 0..d {
            u[k] = (p[k] - x[k]) / h;
            r2 += u[k] * u[k];
        }
        let w = match cutoff2 {
            Some(c2) if r2 > c2 => continue,
            Some(_) => peak,
            None => peak * (-0.5 * r2).exp(),
        };
        if w > 0.0 {
            f(&u, w, data.response(i));
        }
    }
}

/// Assembles `B̄`, the rescaled right-hand side and `λ_min(B̄)` at `x`.
pub fn build_local_system<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<LocalFit, LpError> {
    check_dim(data, x)?;
    let d = data.dim();
    let basis = multi_index_basis(cfg.degree, d);
    let m = basis.len();
    let mut bbar = SymMatrix::zeros(m);
    let mut rhs = vec![0.0; m];
    let mut mono = vec![0.0; m];
    for_each_weighted(data, x, cfg, |u, w, y| {
        for (v, s) in mono.iter_mut().zip(&basis) {
            *v = s.monomial(u);
        }
        for a in 0..m {
            let wa = w * mono[a];
            rhs[a] += y * wa;
            for b in a..m {
                bbar.add_sym(a, b, wa * mono[b]);
            }
        }
    });
    let scale = 1.0 / (data.len() as f64 * cfg.bandwidth.powi(d as i32));
    bbar.scale(scale);
    rhs.iter_mut().for_each(|v| *v *= scale);
    let lambda_min = min_eigenvalue(&bbar);
    Ok(LocalFit {
        query: x.to_vec(),
        basis,
        bbar,
        rhs,
        lambda_min,
    })
}

/// Unscaled moment matrix `Q` and vector `V`:
/// `Q_{s1,s2} = Σ (X_i - x)^{s1+s2} K((X_i - x)/h)`,
/// `V_s = Σ Y_i (X_i - x)^s K((X_i - x)/h)`.
pub fn raw_system<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<(SymMatrix, Vec<f64>), LpError> {
    check_dim(data, x)?;
    let basis = multi_index_basis(cfg.degree, data.dim());
    let m = basis.len();
    let h = cfg.bandwidth;
    let mut q = SymMatrix::zeros(m);
    let mut v = vec![0.0; m];
    let mut off = vec![0.0; data.dim()];
    for_each_weighted(data, x, cfg, |u, w, y| {
        for (o, ui) in off.iter_mut().zip(u) {
            *o = ui * h;
        }
        let mono: Vec<f64> = basis.iter().map(|s| s.monomial(&off)).collect();
        for a in 0..m {
            v[a] += y * mono[a] * w;
            for b in a..m {
                q.add_sym(a, b, mono[a] * mono[b] * w);
            }
        }
    });
    Ok((q, v))
}

/// Design matrix `Z_{i,s} = (X_i - x)^s √K((X_i - x)/h)`, one row per
/// sample (zero rows included), so that `Q = ZᵀZ`.
pub fn design_matrix<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<Vec<Vec<f64>>, LpError> {
    check_dim(data, x)?;
    let d = data.dim();
    let basis = multi_index_basis(cfg.degree, d);
    let h = cfg.bandwidth;
    let mut rows = Vec::with_capacity(data.len());
    let mut u = vec![0.0; d];
    let mut off = vec![0.0; d];
    for i in 0..data.len() {
        let p = data.point(i);
        for k in 0..d {
            off[k] = p[k] - x[k];
            u[k] = off[k] / h;
        }
        let sk = cfg.kernel.eval(&u).sqrt();
        rows.push(basis.iter().map(|s| s.monomial(&off) * sk).collect());
    }
    Ok(rows)
}

/// LP(l) estimate at `x`: the constant coefficient of the weighted
/// least-squares polynomial fit, or 0 when the minimizer is not unique.
pub fn lp_estimate<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<f64, LpError> {
    Ok(build_local_system(data, x, cfg)?.constant_coefficient())
}

/// Same estimate through the unscaled route `U(0)ᵀ Q⁻¹ V`; kept as an
/// independent check on the rescaled solve.
pub fn lp_estimate_raw<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<f64, LpError> {
    let (q, v) = raw_system(data, x, cfg)?;
    Ok(solve_sym(&q, &v).map(|t| t[0]).unwrap_or(0.0))
}

/// Outcome of the guarded estimator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardedEstimate {
    /// Clipped estimate in `[0, 1]`, or 0 when guarded.
    pub value: f64,
    /// Unclipped LP estimate (0 when the minimizer is not unique).
    pub raw: f64,
    pub lambda_min: f64,
    pub threshold: f64,
    /// True when `λ_min(B̄) ≤ (log n)⁻¹` forced the value to 0.
    pub guarded: bool,
}

/// The thresholded estimator: `clamp(lp_estimate, 0, 1)` when
/// `λ_min(B̄) > (log n)⁻¹`, otherwise 0.
pub fn eta_star_detail<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<GuardedEstimate, LpError> {
    let n = cfg.sample_size_hint.unwrap_or(data.len());
    if n < 3 {
        return Err(LpError::InvalidSampleSize(n));
    }
    let threshold = 1.0 / (n as f64).ln();
    let fit = build_local_system(data, x, cfg)?;
    if fit.lambda_min > threshold {
        let raw = fit.constant_coefficient();
        Ok(GuardedEstimate {
            value: raw.clamp(0.0, 1.0),
            raw,
            lambda_min: fit.lambda_min,
            threshold,
            guarded: false,
        })
    } else {
        Ok(GuardedEstimate {
            value: 0.0,
            raw: 0.0,
            lambda_min: fit.lambda_min,
            threshold,
            guarded: true,
        })
    }
}

pub fn eta_star<O: Observations + ?Sized>(
    data: &O,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<f64, LpError> {
    eta_star_detail(data, x, cfg).map(|e| e.value)
}
