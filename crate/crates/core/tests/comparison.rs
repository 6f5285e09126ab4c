//! Comparison inequalities checked against exact risks on random discrete
//! laws, and a brute-force check of the completion bound over every rule.

use plugin_rates::classify::{
    bayes_completion, comparison_bound_lp, comparison_bound_sup, decomposition_bound, exact_risks,
    gap_tail_bound, lemma61_bound, DecisionRule, DiscreteJointLaw, MarginParams, Provenance,
};
use plugin_rates::data::Label;
use proptest::prelude::*;

fn law_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=10).prop_flat_map(|k| {
        (
            prop::collection::vec(0.01f64..1.0, k),
            prop::collection::vec(prop_oneof![Just(0.5), 0.0f64..=1.0, 0.45f64..0.55], k),
            prop::collection::vec(-0.3f64..0.3, k),
        )
    })
}

fn build(probs: &[f64], eta: &[f64]) -> DiscreteJointLaw {
    let total: f64 = probs.iter().sum();
    DiscreteJointLaw::new(
        (0..probs.len()).map(|j| vec![j as f64]).collect(),
        probs.iter().map(|p| p / total).collect(),
        eta.to_vec(),
    )
    .unwrap()
}

/// Rule reading its label from a table indexed by the (integer) point.
fn table_rule(labels: Vec<Label>) -> DecisionRule {
    DecisionRule::new(Provenance::Custom("table".into()), move |x| {
        labels[x[0] as usize]
    })
}

fn slack(b: f64) -> f64 {
    b * (1.0 + 1e-12) + 1e-15
}

proptest! {
    #[test]
    fn plug_in_bounds_hold((probs, eta, noise) in law_strategy(), alpha in 0.1f64..4.0, delta in 0.001f64..0.5) {
        let law = build(&probs, &eta);
        let m = MarginParams::new(alpha, law.certified_c0(alpha)).unwrap();
        let eta_hat: Vec<f64> = eta.iter().zip(&noise).map(|(e, z)| (e + z).clamp(0.0, 1.0)).collect();
        let rule = table_rule(eta_hat.iter().map(|&v| Label::from(v >= 0.5)).collect());
        let excess = exact_risks(&rule, &law).excess;
        prop_assert!(excess <= slack(comparison_bound_sup(law.distance(&eta_hat, f64::INFINITY), m).excess));
        for p in [1.0, 2.0, 4.0] {
            prop_assert!(excess <= slack(comparison_bound_lp(law.distance(&eta_hat, p), p, m).unwrap()));
        }
        prop_assert!(excess <= slack(decomposition_bound(&law, &eta_hat, delta, m)));
    }

    #[test]
    fn gapped_laws_obey_the_tail_bound(k in 1usize..10, t0 in 0.01f64..0.4, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = plugin_rates::synth::SimRng::seed_from_u64(seed);
        let probs: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let eta: Vec<f64> = (0..k)
            .map(|_| {
                let off = rng.random_range(t0 * 1.001..=0.5);
                if rng.random::<bool>() { 0.5 + off } else { 0.5 - off }
            })
            .collect();
        let law = build(&probs, &eta);
        prop_assert_eq!(law.margin_profile(t0), 0.0);
        let eta_hat: Vec<f64> = eta.iter().map(|e| (e + rng.random_range(-0.6..0.6)).clamp(0.0, 1.0)).collect();
        let rule = table_rule(eta_hat.iter().map(|&v| Label::from(v >= 0.5)).collect());
        prop_assert!(exact_risks(&rule, &law).excess <= slack(gap_tail_bound(&law, &eta_hat, t0)));
    }
}

#[test]
fn completion_bound_dominates_every_rule() {
    use rand::{Rng, SeedableRng};
    let mut rng = plugin_rates::synth::SimRng::seed_from_u64(61);
    for _ in 0..200 {
        let k = rng.random_range(1..=8usize);
        let probs: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let eta: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random::<f64>() < 0.2 {
                    0.5
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let law = build(&probs, &eta);
        let alpha = rng.random_range(0.2..3.0);
        let m = MarginParams::new(alpha, law.certified_c0(alpha)).unwrap();
        let eta_fn = {
            let eta = eta.clone();
            move |x: &[f64]| eta[x[0] as usize]
        };
        for mask in 0..1u32 << k {
            let f = table_rule((0..k).map(|j| Label::from(mask >> j & 1 == 1)).collect());
            let f2 = bayes_completion(&f, eta_fn.clone());
            let differ: f64 = (0..k)
                .filter(|&j| f.eval(law.point(j)) != f2.eval(law.point(j)))
                .map(|j| law.prob(j))
                .sum();
            let bound = lemma61_bound(exact_risks(&f, &law).excess, m)
                .unwrap()
                .value;
            assert!(differ <= slack(bound), "mask {mask:b}: {differ} > {bound}");
        }
    }
}
