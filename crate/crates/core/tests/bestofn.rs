mod common;

use alignbounds_core::bestofn::{
    bestofn_exact, bestofn_kl, bnrl_gap, catalog_reports, dominance_check, exp_reference_kl,
    f_bound_closed, matched_sample_count, renyi_bound_closed,
};
use alignbounds_core::tilt::kl_max;
use alignbounds_core::dist::{pushforward, Policy};
use alignbounds_core::{FiniteDist, RewardMap};
use common::*;
use proptest::prelude::*;

/// Law of the selected symbol by enumerating all `k^n` ordered samples, with
/// the selection split evenly among maximizing sample positions.
fn enumerate(base: &[f64], reward: &[f64], n: u32) -> Vec<f64> {
    let k = base.len();
    let mut law = vec![0.0; k];
    let mut draw = vec![0usize; n as usize];
    for code in 0..k.pow(n) {
        let mut c = code;
        for slot in draw.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let weight: f64 = draw.iter().map(|&i| base[i]).product();
        let top = draw.iter().map(|&i| reward[i]).fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = draw.iter().copied().filter(|&i| reward[i] == top).collect();
        for i in &winners {
            law[*i] += weight / winners.len() as f64;
        }
    }
    law
}

#[test]
fn enumeration_matches_on_worked_examples() {
    let law = enumerate(&[1.0 / 3.0; 3], &[1.0, 2.0, 3.0], 2);
    for (a, b) in law.iter().zip([1.0 / 9.0, 3.0 / 9.0, 5.0 / 9.0]) {
        assert!((a - b).abs() < 1e-15);
    }
    let law = enumerate(&[0.5, 0.5], &[0.0, 1.0], 2);
    assert!((law[1] - 0.75).abs() < 1e-15);
}

#[test]
fn uniform3_strict_inequality_witness() {
    let base = FiniteDist::uniform(3).unwrap();
    let reward = RewardMap::new(vec![1.0, 2.0, 3.0]).unwrap();
    let report = bestofn_kl(&base, &reward, 2).unwrap();
    let law = enumerate(base.probs(), reward.values(), 2);
    let oracle: f64 = law.iter().map(|q| q * (3.0 * q).ln()).sum();
    assert!((report.achieved_value - oracle).abs() < 1e-14);
    assert!(report.slack > 0.02);
}

proptest! {
    #![proptest_config(cases(400))]

    #[test]
    fn exact_law_matches_enumeration((base, reward) in instance(1..=5), n in 1u32..=4) {
        let policy = bestofn_exact(&base, &reward, n as u64).unwrap();
        let oracle = enumerate(base.probs(), reward.values(), n);
        for (a, b) in policy.law().probs().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn kl_below_reference_bound((base, reward) in instance(1..=64), n in 1u64..=512) {
        let report = bestofn_kl(&base, &reward, n).unwrap();
        prop_assert!(report.achieved_value <= exp_reference_kl(n) + 1e-9);
    }

    #[test]
    fn catalog_bounds_hold((base, reward) in instance(2..=12), n in 1u64..=64) {
        let policy = bestofn_exact(&base, &reward, n).unwrap();
        for report in catalog_reports(&policy, &[0.25, 0.5, 0.9, 2.0, 4.0]).unwrap() {
            prop_assert!(report.holds(), "{report:?}");
        }
    }

    #[test]
    fn mean_nondecreasing_in_n((base, reward) in instance(1..=16)) {
        let mut last = f64::NEG_INFINITY;
        for n in [1u64, 2, 3, 5, 8, 16, 64, 256] {
            let mean = bestofn_exact(&base, &reward, n).unwrap().law().expect(&reward).unwrap();
            prop_assert!(mean >= last - 1e-12);
            last = mean;
        }
    }

    #[test]
    fn dominance_and_improvement((base, reward) in instance(1..=16), n in 1u64..=32) {
        let d = dominance_check(&base, &reward, n).unwrap();
        prop_assert!(d.holds, "{d:?}");
        let policy = bestofn_exact(&base, &reward, n).unwrap();
        prop_assert!(policy.improvement() >= -1e-12);
    }

    #[test]
    fn selected_law_is_a_distribution((base, reward) in instance(1..=64), n in 1u64..=512) {
        let policy = bestofn_exact(&base, &reward, n).unwrap();
        let total: f64 = policy.law().probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(policy.law().probs().iter().all(|p| *p >= 0.0));
        let pushed = pushforward(policy.law(), &reward).unwrap();
        prop_assert!((pushed.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn renyi_closed_form_near_one() {
    for n in [2u64, 7, 50] {
        for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
            let v = renyi_bound_closed(alpha, n).unwrap();
            assert!((v - f_bound_closed("kl", n).unwrap()).abs() < 1e-3);
        }
    }
}

#[test]
fn matched_count_respects_budget() {
    assert_eq!(matched_sample_count(0.5), 2);
    assert_eq!(matched_sample_count(1.0), 3);
    assert_eq!(matched_sample_count(2.0), 8);
    for k in 1..=400 {
        let delta = k as f64 * 0.01;
        let n = matched_sample_count(delta);
        assert!(exp_reference_kl(n) <= delta + 1e-12 || n == 1, "delta={delta} n={n}");
    }
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn bestofn_close_to_constrained_tilt(
        (base, reward) in (12usize..=20).prop_flat_map(|k| (probs(k), prop::collection::vec(-1.0f64..1.0, k))),
    ) {
        let (base, reward) = (dist(base), common::reward(reward));
        prop_assume!(kl_max(&base, &reward).unwrap() > 2.0);
        for delta in [0.5, 1.0, 2.0] {
            let report = bnrl_gap(&base, &reward, delta).unwrap();
            prop_assert!(report.holds(), "delta={delta}: {report:?}");
        }
    }
}
