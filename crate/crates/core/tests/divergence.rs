mod common;

use alignbounds_core::continuous::{exp_order_stat_law, Exponential, Gaussian};
use alignbounds_core::divergence::{
    f_div, f_div_continuous, kl, renyi, renyi_dual_lower_bound, renyi_over_alpha_limit,
};
use alignbounds_core::{FGenerator, FiniteDist, RewardMap};
use common::*;
use proptest::prelude::*;

/// `Σ q f(p/q)` with the zero conventions spelled out independently.
fn f_oracle(p: &[f64], q: &[f64], name: &str) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        total += match (name, a == 0.0, b == 0.0) {
            (_, true, true) => 0.0,
            ("kl", false, true) | ("chi2", false, true) => f64::INFINITY,
            ("tv", false, true) => a / 2.0,
            ("hellinger", false, true) => a,
            ("forward_kl", false, true) => 0.0,
            ("kl", true, false) => 0.0,
            ("forward_kl", true, false) => f64::INFINITY,
            ("kl", ..) => a * (a / b).ln(),
            ("chi2", ..) => (a - b).powi(2) / b,
            ("tv", ..) => (a - b).abs() / 2.0,
            ("hellinger", ..) => (a.sqrt() - b.sqrt()).powi(2),
            ("forward_kl", ..) => b * (b / a).ln(),
            _ => unreachable!(),
        };
    }
    total
}

fn renyi_oracle(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a.powf(alpha) * b.powf(1.0 - alpha))
        .sum();
    s.ln() / (alpha - 1.0)
}

fn d(p: &[f64]) -> FiniteDist {
    FiniteDist::from_probs(p.to_vec()).unwrap()
}

fn merge(p: &[f64], i: usize, j: usize) -> Vec<f64> {
    let mut out: Vec<f64> = p
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, x)| *x)
        .collect();
    let target = if i < j { i } else { i - 1 };
    out[target] += p[j];
    out
}

const ALPHAS: [f64; 8] = [0.1, 0.3, 0.5, 0.8, 1.2, 1.5, 2.0, 3.5];

#[test]
fn finite_worked_examples() {
    let p = d(&[0.75, 0.25]);
    let q = d(&[0.5, 0.5]);
    let expected = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    assert!((kl(&p, &q).unwrap() - expected).abs() < 1e-15);
    assert!((expected - 0.130812).abs() < 1e-6);
    for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
        assert!((renyi(&p, &q, alpha).unwrap().value - expected).abs() < 1e-4);
    }
    let point = d(&[1.0, 0.0]);
    assert!((f_div(&point, &q, &FGenerator::chi2()).unwrap().value - 1.0).abs() < 1e-15);
    assert_eq!(kl(&q, &point).unwrap(), f64::INFINITY);
    assert_eq!(f_div(&p, &p, &FGenerator::kl()).unwrap().value, 0.0);
    assert!(renyi(&p, &q, 0.0).is_err());
    assert!(f_div(&p, &d(&[0.2, 0.3, 0.5]), &FGenerator::kl()).is_err());
}

#[test]
fn alpha_limit_worked_examples() {
    let p = d(&[0.75, 0.25]);
    let q = d(&[0.5, 0.5]);
    let expected = 0.5 * (2.0f64 / 3.0).ln() + 0.5 * 2f64.ln();
    let limit = renyi_over_alpha_limit(&p, &q).unwrap();
    assert!((limit.value - expected).abs() < 1e-9);
    assert!(!limit.exact);
    assert_eq!(renyi_over_alpha_limit(&p, &p).unwrap().value, 0.0);
}

#[test]
fn continuous_worked_examples() {
    let unit = Exponential::unit();
    let two = exp_order_stat_law(2).unwrap();
    let v = f_div_continuous(&two, &unit, &FGenerator::kl()).unwrap().value;
    assert!((v - (2f64.ln() - 0.5)).abs() < 1e-10);
    let one = exp_order_stat_law(1).unwrap();
    assert!(f_div_continuous(&one, &unit, &FGenerator::kl()).unwrap().value.abs() < 1e-12);
    let shifted = Gaussian::new(1.0, 1.0).unwrap();
    let v = f_div_continuous(&shifted, &Gaussian::standard(), &FGenerator::kl()).unwrap().value;
    assert!((v - 0.5).abs() < 1e-9);
}

#[test]
fn dual_bound_is_tight_for_exponential_family() {
    // p ∝ q e^{h}, so the optimal witness is a multiple of ln(p/q).
    let q = [0.1, 0.2, 0.3, 0.4];
    let h = [-1.0, 0.5, 0.0, 1.25];
    let weights: Vec<f64> = q.iter().zip(&h).map(|(a, b): (&f64, &f64)| a * b.exp()).collect();
    let z: f64 = weights.iter().sum();
    let p = d(&normalize(weights.iter().map(|w| w / z).collect()));
    let q = d(&q);
    let witness = RewardMap::new(h.to_vec()).unwrap();
    for alpha in [0.3, 0.7, 1.5, 3.0] {
        let bound = renyi_dual_lower_bound(&p, &q, alpha, &witness).unwrap();
        let target = renyi(&p, &q, alpha).unwrap().value / alpha;
        assert!(bound.value <= target + 1e-12);
        assert!(target - bound.value < 1e-8, "alpha={alpha}: {} vs {target}", bound.value);
    }
    let same = renyi_dual_lower_bound(&q, &q, 0.5, &witness).unwrap();
    assert!(same.value.abs() < 1e-15);
}

proptest! {
    #![proptest_config(cases(2000))]

    #[test]
    fn divergences_match_oracle_and_are_nonnegative((p, q) in pair(1..=12)) {
        for gen in FGenerator::catalog() {
            let v = f_div(&p, &q, &gen).unwrap().value;
            let o = f_oracle(p.probs(), q.probs(), gen.name());
            prop_assert!(v >= -1e-12, "{} = {v}", gen.name());
            if o.is_finite() {
                prop_assert!((v - o).abs() <= 1e-12 * (1.0 + o.abs()), "{}: {v} vs {o}", gen.name());
            } else {
                prop_assert_eq!(v, f64::INFINITY);
            }
        }
        for alpha in ALPHAS {
            let v = renyi(&p, &q, alpha).unwrap().value;
            prop_assert!(v >= -1e-12 && !v.is_nan(), "alpha={alpha}: {v}");
            let o = renyi_oracle(p.probs(), q.probs(), alpha);
            if o.is_finite() && v.is_finite() {
                prop_assert!((v - o).abs() <= 1e-10 * (1.0 + o.abs()), "alpha={alpha}: {v} vs {o}");
            } else {
                prop_assert_eq!(v.is_finite(), o.is_finite());
            }
        }
    }
}

proptest! {
    #![proptest_config(cases(300))]

    #[test]
    fn merging_two_symbols_never_increases((p, q) in pair(2..=10)) {
        let k = p.len();
        let gens = FGenerator::catalog();
        let before_f: Vec<f64> = gens.iter().map(|g| f_div(&p, &q, g).unwrap().value).collect();
        let before_r: Vec<f64> = ALPHAS.iter().map(|a| renyi(&p, &q, *a).unwrap().value).collect();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let pm = d(&merge(p.probs(), i, j));
                let qm = d(&merge(q.probs(), i, j));
                for (g, before) in gens.iter().zip(&before_f) {
                    let after = f_div(&pm, &qm, g).unwrap().value;
                    prop_assert!(after <= before + 1e-12 * (1.0 + before.abs()), "{} {i}+{j}", g.name());
                }
                for (a, before) in ALPHAS.iter().zip(&before_r) {
                    let after = renyi(&pm, &qm, *a).unwrap().value;
                    prop_assert!(after <= before + 1e-10 * (1.0 + before.abs()), "alpha={a} {i}+{j}");
                }
            }
        }
    }

    #[test]
    fn renyi_nondecreasing_in_order((p, q) in pair(1..=10)) {
        let grid: Vec<f64> = (1..40).map(|k| k as f64 * 0.1).filter(|a| (a - 1.0).abs() > 1e-9).collect();
        let values: Vec<f64> = grid.iter().map(|a| renyi(&p, &q, *a).unwrap().value).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] || w[1] >= w[0] - 1e-10 * (1.0 + w[0].abs()), "{:?}", w);
        }
    }

    #[test]
    fn skew_symmetry((p, q) in full_pair(1..=10), alpha in 0.05f64..0.95) {
        let left = renyi(&p, &q, alpha).unwrap().value / alpha;
        let right = renyi(&q, &p, 1.0 - alpha).unwrap().value / (1.0 - alpha);
        prop_assert!((left - right).abs() < 1e-10, "{left} vs {right}");
    }

    #[test]
    fn alpha_limit_is_swapped_kl((p, q) in full_pair(8..=8)) {
        let limit = renyi_over_alpha_limit(&p, &q).unwrap().value;
        let target = kl(&q, &p).unwrap();
        prop_assert!((limit - target).abs() < 1e-6, "{limit} vs {target}");
    }

    #[test]
    fn dual_bound_never_exceeds_divergence(
        (p, q) in full_pair(2..=8),
        h in prop::collection::vec(-3.0f64..3.0, 8),
        alpha in prop_oneof![0.05f64..0.95, 1.05f64..4.0],
    ) {
        let witness = RewardMap::new(h[..p.len()].to_vec()).unwrap();
        let bound = renyi_dual_lower_bound(&p, &q, alpha, &witness).unwrap();
        let target = renyi(&p, &q, alpha).unwrap().value / alpha;
        prop_assert!(bound.value <= target + 1e-10 * (1.0 + target), "{} vs {target}", bound.value);
    }
}
