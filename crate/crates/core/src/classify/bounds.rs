//! Comparison inequalities between regression error and excess risk,
//! evaluated as numbers so they can be checked against exact risks.

use super::{ClassifyError, DiscreteJointLaw, MarginParams};

/// Sup-norm comparison bound and its set-difference companion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBound {
    /// `2 C₀ D^{1+α}`, bounding the excess risk of the plug-in rule.
    pub excess: f64,
    /// `C₀ D^α`, bounding `P_X(f̄ ≠ f*, η ≠ 1/2)`.
    pub disagreement: f64,
}

pub fn comparison_bound_sup(dist_inf: f64, m: MarginParams) -> SupBound {
    assert!(dist_inf >= 0.0, "distance must be nonnegative");
    SupBound {
        excess: 2.0 * m.c0 * dist_inf.powf(1.0 + m.alpha),
        disagreement: m.c0 * dist_inf.powf(m.alpha),
    }
}

/// `C₁(α, p) = 2(α + p) p⁻¹ (p/α)^{α/(α+p)} C₀^{(p−1)/(α+p)}`.
pub fn c1_constant(alpha: f64, p: f64, c0: f64) -> f64 {
    2.0 * (alpha + p) / p * (p / alpha).powf(alpha / (alpha + p)) * c0.powf((p - 1.0) / (alpha + p))
}

/// `C₁(α, p) D^{p(1+α)/(p+α)}` for the `L_p(P_X)` distance `D`.
pub fn comparison_bound_lp(dist_p: f64, p: f64, m: MarginParams) -> Result<f64, ClassifyError> {
    if !(m.alpha > 0.0) {
        return Err(ClassifyError::InvalidAlpha(m.alpha));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ClassifyError::InvalidParams(format!(
            "norm index must lie in [1, ∞), got {p}"
        )));
    }
    assert!(dist_p >= 0.0, "distance must be nonnegative");
    if m.alpha.is_infinite() {
        // the limit of the exponent is p and of the constant 2 C₀^0 · 1
        return Ok(2.0 * dist_p.powf(p));
    }
    Ok(c1_constant(m.alpha, p, m.c0) * dist_p.powf(p * (1.0 + m.alpha) / (p + m.alpha)))
}

/// `C = (1 + 1/α)(α C₀)^{1/(1+α)}`.
pub fn lemma61_constant(m: MarginParams) -> Result<f64, ClassifyError> {
    if !(m.alpha > 0.0 && m.alpha.is_finite()) {
        return Err(ClassifyError::InvalidAlpha(m.alpha));
    }
    Ok((1.0 + 1.0 / m.alpha) * (m.alpha * m.c0).powf(1.0 / (1.0 + m.alpha)))
}

/// Bound on `P_X(f ≠ f**)` in terms of the excess risk `d(f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma61Bound {
    pub constant: f64,
    pub value: f64,
}

/// `C d(f)^{α/(1+α)}`.
///
/// From `d(f) ≥ 2t (P_X(f ≠ f**) − C₀ t^α)` for every `t > 0`, optimized
/// over `t`; the constant is within a factor `2^{α/(1+α)}` of the optimum.
pub fn lemma61_bound(excess: f64, m: MarginParams) -> Result<Lemma61Bound, ClassifyError> {
    let constant = lemma61_constant(m)?;
    assert!(excess >= 0.0, "excess risk must be nonnegative");
    Ok(Lemma61Bound {
        constant,
        value: constant * excess.powf(m.alpha / (1.0 + m.alpha)),
    })
}

/// `2 C₀ δ^{1+α} + 2 E[|η̂ − η| 1{|η̂ − η| > δ}]` on a discrete law.
pub fn decomposition_bound(
    law: &DiscreteJointLaw,
    eta_hat: &[f64],
    delta: f64,
    m: MarginParams,
) -> f64 {
    assert_eq!(eta_hat.len(), law.len());
    let tail: f64 = (0..law.len())
        .map(|j| {
            let gap = (eta_hat[j] - law.eta(j)).abs();
            if gap > delta {
                law.prob(j) * gap
            } else {
                0.0
            }
        })
        .sum();
    2.0 * m.c0 * delta.powf(1.0 + m.alpha) + 2.0 * tail
}

/// `P_X(|η̂ − η| > t₀)` on a discrete law; bounds the excess risk of the
/// plug-in rule whenever `G(t₀) = 0`.
pub fn gap_tail_bound(law: &DiscreteJointLaw, eta_hat: &[f64], t0: f64) -> f64 {
    assert_eq!(eta_hat.len(), law.len());
    (0..law.len())
        .filter(|&j| (eta_hat[j] - law.eta(j)).abs() > t0)
        .map(|j| law.prob(j))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(alpha: f64, c0: f64) -> MarginParams {
        MarginParams::new(alpha, c0).unwrap()
    }

    #[test]
    fn sup_examples() {
        assert_eq!(comparison_bound_sup(0.0, mp(1.0, 1.0)).excess, 0.0);
        assert!((comparison_bound_sup(0.1, mp(1.0, 1.0)).excess - 0.02).abs() < 1e-15);
        let b = comparison_bound_sup(0.3, mp(0.0, 1.0));
        assert!((b.excess - 0.6).abs() < 1e-15);
        assert_eq!(b.disagreement, 1.0);
    }

    #[test]
    fn lp_examples() {
        assert_eq!(comparison_bound_lp(0.0, 2.0, mp(2.0, 1.0)).unwrap(), 0.0);
        assert!((comparison_bound_lp(1.0, 2.0, mp(2.0, 1.0)).unwrap() - 4.0).abs() < 1e-12);
        assert!((comparison_bound_lp(0.5, 1.0, mp(1.0, 2.0)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            comparison_bound_lp(0.5, 1.0, mp(0.0, 2.0)),
            Err(ClassifyError::InvalidAlpha(0.0))
        );
    }

    #[test]
    fn lemma61_examples() {
        assert_eq!(lemma61_bound(0.0, mp(1.0, 1.0)).unwrap().value, 0.0);
        let b = lemma61_bound(0.25, mp(1.0, 1.0)).unwrap();
        assert!((b.constant - 2.0).abs() < 1e-15);
        assert!((b.value - 1.0).abs() < 1e-15);
        assert!(lemma61_bound(0.25, mp(0.0, 1.0)).is_err());
    }

    #[test]
    fn lemma61_constant_dominates_the_optimum() {
        // min over t of d/(2t) + C₀ t^α, by a fine scan
        for &(alpha, c0, d) in &[(0.5, 1.0, 0.1), (1.0, 2.0, 0.03), (3.0, 0.7, 0.2)] {
            let m = mp(alpha, c0);
            let scan = (1..200_000)
                .map(|i| i as f64 * 1e-5)
                .map(|t| d / (2.0 * t) + c0 * t.powf(alpha))
                .fold(f64::INFINITY, f64::min);
            let bound = lemma61_bound(d, m).unwrap().value;
            assert!(bound >= scan - 1e-9);
            assert!(bound <= scan * 2f64.powf(alpha / (1.0 + alpha)) * (1.0 + 1e-6));
        }
    }
}
