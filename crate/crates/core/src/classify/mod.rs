//! Plug-in rules, risk functionals and margin diagnostics.
//!
//! Excess risk is always measured against an oracle that knows the true
//! regression function, either exactly on a finite [`DiscreteJointLaw`] or by
//! Monte Carlo over an [`OracleDistribution`].

mod bounds;

pub use bounds::{
    c1_constant, comparison_bound_lp, comparison_bound_sup, decomposition_bound, gap_tail_bound,
    lemma61_bound, lemma61_constant, Lemma61Bound, SupBound,
};

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use thiserror::Error;

use crate::data::Label;
use crate::synth::{OracleDistribution, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("margin exponent alpha = {0} gives no bound here (alpha must be positive)")]
    InvalidAlpha(f64),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Where a decision rule came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    PlugIn,
    OracleBayes,
    NetMember { index: u128 },
    Custom(String),
}

type RuleFn = dyn Fn(&[f64]) -> Label + Send + Sync;

/// A total, deterministic map `ℝᵈ → {0, 1}`.
#[derive(Clone)]
pub struct DecisionRule {
    rule: Arc<RuleFn>,
    provenance: Provenance,
}

impl fmt::Debug for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecisionRule")
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl DecisionRule {
    pub fn new<F>(provenance: Provenance, rule: F) -> Self
    where
        F: Fn(&[f64]) -> Label + Send + Sync + 'static,
    {
        Self {
            rule: Arc::new(rule),
            provenance,
        }
    }

    pub fn constant(label: Label) -> Self {
        Self::new(Provenance::Custom(format!("constant {label}")), move |_| {
            label
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Label {
        (self.rule)(x)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// `x ↦ 1{η̂(x) ≥ 1/2}`.
pub fn plug_in<F>(eta_hat: F) -> DecisionRule
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    DecisionRule::new(Provenance::PlugIn, move |x| Label::from(eta_hat(x) >= 0.5))
}

/// Bayes rule of a known regression function.
pub fn bayes_rule<F>(eta: F) -> DecisionRule
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    DecisionRule::new(Provenance::OracleBayes, move |x| Label::from(eta(x) >= 0.5))
}

/// `f**(·, f)`: the Bayes label wherever `η ≠ 1/2`, and `f` on the tie set.
pub fn bayes_completion<F>(f: &DecisionRule, eta: F) -> DecisionRule
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    let inner = f.clone();
    DecisionRule::new(Provenance::Custom("bayes completion".into()), move |x| {
        let e = eta(x);
        if e == 0.5 {
            inner.eval(x)
        } else {
            Label::from(e > 0.5)
        }
    })
}

/// Margin assumption `P_X(0 < |η − 1/2| ≤ t) ≤ C₀ t^α`. `alpha` may be
/// `+∞` for laws with no mass in a neighbourhood of the decision level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginParams {
    pub alpha: f64,
    pub c0: f64,
}

impl MarginParams {
    pub fn new(alpha: f64, c0: f64) -> Result<Self, ClassifyError> {
        if !(alpha >= 0.0) {
            return Err(ClassifyError::InvalidParams(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(ClassifyError::InvalidParams(format!(
                "C0 must be positive, got {c0}"
            )));
        }
        Ok(Self { alpha, c0 })
    }
}

/// Hölder class `Σ(β, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderParams {
    pub beta: f64,
    pub lip: f64,
}

impl HolderParams {
    pub fn new(beta: f64, lip: f64) -> Result<Self, ClassifyError> {
        if !(beta > 0.0 && beta.is_finite() && lip > 0.0 && lip.is_finite()) {
            return Err(ClassifyError::InvalidParams(format!(
                "need beta > 0 and L > 0, got ({beta}, {lip})"
            )));
        }
        Ok(Self { beta, lip })
    }
}

/// Support regularity and density bounds of `P_X`. `mu_min = 0` marks the
/// mild density assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityParams {
    pub c0_reg: f64,
    pub r0: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub support: String,
}

impl DensityParams {
    pub fn new(
        c0_reg: f64,
        r0: f64,
        mu_min: f64,
        mu_max: f64,
        support: impl Into<String>,
    ) -> Result<Self, ClassifyError> {
        if !(r0 > 0.0 && c0_reg > 0.0 && mu_min >= 0.0 && mu_max > 0.0 && mu_min <= mu_max) {
            return Err(ClassifyError::InvalidParams(format!(
                "bad density constants c0={c0_reg} r0={r0} mu_min={mu_min} mu_max={mu_max}"
            )));
        }
        Ok(Self {
            c0_reg,
            r0,
            mu_min,
            mu_max,
            support: support.into(),
        })
    }

    pub fn is_strong(&self) -> bool {
        self.mu_min > 0.0
    }
}

/// A joint law of `(X, Y)` with finite support, used as an exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJointLaw {
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
    eta: Vec<f64>,
}

impl DiscreteJointLaw {
    pub fn new(
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        eta: Vec<f64>,
    ) -> Result<Self, ClassifyError> {
        if points.is_empty() || points.len() != probs.len() || points.len() != eta.len() {
            return Err(ClassifyError::InvalidLaw(
                "support, probabilities and eta must have equal nonzero length".into(),
            ));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(ClassifyError::InvalidLaw("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ClassifyError::InvalidLaw(format!(
                "probabilities sum to {total}"
            )));
        }
        if eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(ClassifyError::InvalidLaw("eta outside [0, 1]".into()));
        }
        Ok(Self { points, probs, eta })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.probs[j]
    }

    pub fn eta(&self, j: usize) -> f64 {
        self.eta[j]
    }

    pub fn etas(&self) -> &[f64] {
        &self.eta
    }

    pub fn bayes_label(&self, j: usize) -> Label {
        Label::from(self.eta[j] >= 0.5)
    }

    /// Exact `G(t) = P_X(0 < |η − 1/2| ≤ t)`.
    pub fn margin_profile(&self, t: f64) -> f64 {
        self.masses()
            .filter(|&(_, e)| e != 0.5 && (e - 0.5).abs() <= t)
            .map(|(p, _)| p)
            .sum()
    }

    /// Smallest `C₀` with `G(t) ≤ C₀ t^α` for all `t > 0`. `G` only jumps at
    /// the realized gaps `|η_j − 1/2|`, so the supremum is a maximum over
    /// those. Floored at `f64::MIN_POSITIVE` when the law has no mass off
    /// the tie set.
    pub fn certified_c0(&self, alpha: f64) -> f64 {
        let mut c0 = 0.0f64;
        for (_, e) in self.masses() {
            let t = (e - 0.5).abs();
            if t > 0.0 {
                c0 = c0.max(self.margin_profile(t) / t.powf(alpha));
            }
        }
        c0.max(f64::MIN_POSITIVE)
    }

    /// `‖g − η‖` in `L_p(P_X)`; `p = ∞` gives the essential supremum.
    pub fn distance(&self, g: &[f64], p: f64) -> f64 {
        assert_eq!(g.len(), self.len());
        let diffs = self
            .probs
            .iter()
            .zip(g.iter().zip(&self.eta))
            .map(|(&pr, (a, b))| (pr, (a - b).abs()));
        if p.is_infinite() {
            diffs
                .filter(|&(pr, _)| pr > 0.0)
                .fold(0.0, |m, (_, d)| m.max(d))
        } else {
            diffs
                .map(|(pr, d)| pr * d.powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }

    fn masses(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probs.iter().copied().zip(self.eta.iter().copied())
    }
}

/// Exact risks of a rule under a discrete law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRisks {
    pub risk: f64,
    pub bayes_risk: f64,
    /// `Σ p_j |2η_j − 1| 1{f(x_j) ≠ f*(x_j)}`.
    pub excess: f64,
}

pub fn exact_risks(f: &DecisionRule, law: &DiscreteJointLaw) -> ExactRisks {
    let labels: Vec<Label> = (0..law.len()).map(|j| f.eval(law.point(j))).collect();
    exact_risks_of_labels(&labels, law)
}

/// Same as [`exact_risks`] for a rule given by its labels on the support.
pub fn exact_risks_of_labels(labels: &[Label], law: &DiscreteJointLaw) -> ExactRisks {
    let mut out = ExactRisks {
        risk: 0.0,
        bayes_risk: 0.0,
        excess: 0.0,
    };
    for (j, &l) in labels.iter().enumerate() {
        let (p, e) = (law.prob(j), law.eta(j));
        let miss = |label: Label| if label == 1 { 1.0 - e } else { e };
        out.risk += p * miss(l);
        out.bayes_risk += p * miss(law.bayes_label(j));
        if l != law.bayes_label(j) {
            out.excess += p * (2.0 * e - 1.0).abs();
        }
    }
    out
}

/// Mean and standard error of a Monte Carlo average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / nf).sqrt(),
        }
    }
}

/// Monte Carlo estimate of `E[|2η(X) − 1| 1{f(X) ≠ f*(X)}]` over `n_mc`
/// draws of `X ~ P_X`.
pub fn excess_risk_mc<O: OracleDistribution + ?Sized>(
    f: &DecisionRule,
    oracle: &O,
    n_mc: usize,
    seed: u64,
) -> McEstimate {
    assert!(n_mc >= 1);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut x = vec![0.0; oracle.dim()];
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n_mc {
        oracle.sample_x(&mut rng, &mut x);
        let e = oracle.eta(&x);
        let bayes = Label::from(e >= 0.5);
        if f.eval(&x) != bayes {
            let v = (2.0 * e - 1.0).abs();
            s += v;
            s2 += v * v;
        }
    }
    McEstimate::from_sums(s, s2, n_mc)
}

/// Empirical margin profile `Ĝ(t) = P̂_X(0 < |η(X) − 1/2| ≤ t)` on an
/// increasing grid, from one shared sample so that it is nondecreasing.
pub fn margin_profile<O: OracleDistribution + ?Sized>(
    oracle: &O,
    t_grid: &[f64],
    n_mc: usize,
    seed: u64,
) -> Vec<McEstimate> {
    assert!(
        !t_grid.is_empty() && t_grid.windows(2).all(|w| w[0] < w[1]),
        "t grid must be increasing"
    );
    let mut rng = SimRng::seed_from_u64(seed);
    let mut x = vec![0.0; oracle.dim()];
    let mut gaps = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        oracle.sample_x(&mut rng, &mut x);
        let g = (oracle.eta(&x) - 0.5).abs();
        if g > 0.0 {
            gaps.push(g);
        }
    }
    gaps.sort_by(f64::total_cmp);
    t_grid
        .iter()
        .map(|&t| {
            let k = gaps.partition_point(|&g| g <= t);
            let p = k as f64 / n_mc as f64;
            McEstimate {
                mean: p,
                se: (p * (1.0 - p) / n_mc as f64).sqrt(),
            }
        })
        .collect()
}
