mod common;

use alignbounds_core::dist::Policy;
use alignbounds_core::divergence::kl;
use alignbounds_core::quadrature::Quadrature;
use alignbounds_core::tilt::{
    gaussian_tilt_oracle, kl_max, residual_tolerance, solve_lambda, solve_lambda_weighted, tilt,
    tilt_for_budget, WeightedPrompt,
};
use alignbounds_core::{Error, FiniteDist, RewardMap};
use common::*;
use proptest::prelude::*;

fn binary() -> (FiniteDist, RewardMap) {
    (FiniteDist::uniform(2).unwrap(), RewardMap::new(vec![0.0, 1.0]).unwrap())
}

/// `base_i e^{β r_i} / Σ` with no max-subtraction; fine for the moderate β used here.
fn naive_tilt(base: &[f64], reward: &[f64], beta: f64) -> Vec<f64> {
    let w: Vec<f64> = base.iter().zip(reward).map(|(b, r)| b * (beta * r).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

#[test]
fn tilt_worked_examples() {
    let (base, reward) = binary();
    assert_eq!(tilt(&base, &reward, 0.0).unwrap().law().probs(), base.probs());
    let p = tilt(&base, &reward, 3f64.ln()).unwrap();
    assert!((p.law().probs()[1] - 0.75).abs() < 1e-15);
    assert!((p.improvement() - 0.25).abs() < 1e-15);
    let sharp = tilt(&base, &reward, 1e3).unwrap();
    assert!((sharp.law().probs()[1] - 1.0).abs() < 1e-9);
    assert!(tilt(&base, &reward, f64::NAN).is_err());
}

#[test]
fn solver_worked_examples() {
    let (base, reward) = binary();
    let zero = solve_lambda(&base, &reward, 0.0).unwrap();
    assert_eq!(zero.beta, 0.0);
    let r = solve_lambda(&base, &reward, 0.1).unwrap();
    let law = naive_tilt(base.probs(), reward.values(), r.beta);
    let recomputed: f64 = law.iter().map(|q| q * (2.0 * q).ln()).sum();
    assert!((recomputed - 0.1).abs() <= residual_tolerance(0.1));
    assert!((r.lambda - 1.0 / r.beta).abs() < 1e-15);

    let top = kl_max(&base, &reward).unwrap();
    assert!((top - 2f64.ln()).abs() < 1e-15);
    let near = solve_lambda(&base, &reward, top - 1e-6).unwrap();
    assert!(near.beta > 10.0 && near.residual <= residual_tolerance(top));
    assert!(matches!(solve_lambda(&base, &reward, top), Err(Error::Infeasible { .. })));
    let flat = RewardMap::new(vec![2.0, 2.0]).unwrap();
    assert!(solve_lambda(&base, &flat, 0.1).is_err());
}

#[test]
fn multi_prompt_solver_hits_weighted_budget() {
    let b1 = FiniteDist::uniform(2).unwrap();
    let r1 = RewardMap::new(vec![0.0, 1.0]).unwrap();
    let b2 = FiniteDist::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
    let r2 = RewardMap::new(vec![-1.0, 0.5, 2.0]).unwrap();
    let prompts = [
        WeightedPrompt { weight: 0.3, base: &b1, reward: &r1 },
        WeightedPrompt { weight: 0.7, base: &b2, reward: &r2 },
    ];
    let r = solve_lambda_weighted(&prompts, 0.2).unwrap();
    let avg = 0.3 * tilt(&b1, &r1, r.beta).unwrap().kl() + 0.7 * tilt(&b2, &r2, r.beta).unwrap().kl();
    assert!((avg - 0.2).abs() <= residual_tolerance(0.2));
    let bad = [WeightedPrompt { weight: 0.5, base: &b1, reward: &r1 }];
    assert!(solve_lambda_weighted(&bad, 0.2).is_err());
}

#[test]
fn gaussian_oracle_examples_and_saturation() {
    let g = gaussian_tilt_oracle(1.0, 1.0).unwrap();
    assert_eq!((g.improvement, g.kl), (1.0, 0.5));
    let g = gaussian_tilt_oracle(4.0, 0.5).unwrap();
    assert_eq!((g.improvement, g.kl), (2.0, 0.5));
    let g = gaussian_tilt_oracle(2.0, 0.0).unwrap();
    assert_eq!((g.improvement, g.kl), (0.0, 0.0));
    for variance in [0.25, 1.0, 4.0] {
        for k in 1..=30 {
            let beta = k as f64 / 10.0;
            let g = gaussian_tilt_oracle(variance, beta).unwrap();
            assert!((g.improvement - (2.0 * variance * g.kl).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn gaussian_oracle_matches_quadrature() {
    // Tilted density ∝ φ_σ(x) e^{βx}; its mean and KL to φ_σ by direct integration.
    let quad = Quadrature::default();
    for (variance, beta) in [(1.0f64, 1.0), (4.0, 0.5), (0.25, 2.0)] {
        let sd: f64 = variance.sqrt();
        let (lo, hi) = (-12.0 * sd + beta * variance, 12.0 * sd + beta * variance);
        let log_base = |x: f64| -x * x / (2.0 * variance) - 0.5 * (2.0 * std::f64::consts::PI * variance).ln();
        let z = quad.integrate(|x| (log_base(x) + beta * x).exp(), lo, hi).unwrap().value;
        let mean = quad.integrate(|x| x * (log_base(x) + beta * x).exp() / z, lo, hi).unwrap().value;
        let div = quad
            .integrate(|x| (log_base(x) + beta * x).exp() / z * (beta * x - z.ln()), lo, hi)
            .unwrap()
            .value;
        let g = gaussian_tilt_oracle(variance, beta).unwrap();
        assert!((mean - g.improvement).abs() < 1e-9);
        assert!((div - g.kl).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn tilt_matches_direct_formula((base, reward) in instance(1..=12), beta in -4.0f64..4.0) {
        let p = tilt(&base, &reward, beta).unwrap();
        let direct = naive_tilt(base.probs(), reward.values(), beta);
        for (a, b) in p.law().probs().iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let z: f64 = base.probs().iter().zip(reward.values()).map(|(b, r)| b * (beta * r).exp()).sum();
        prop_assert!((p.log_partition() - z.ln()).abs() < 1e-12 * (1.0 + z.ln().abs()));
        let identity = beta * p.law().expect(&reward).unwrap() - z.ln();
        prop_assert!((p.kl() - identity.max(0.0)).abs() < 1e-10);
        prop_assert!((p.kl() - kl(p.law(), &base).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn improvement_and_kl_nondecreasing_in_beta((base, reward) in instance(1..=12)) {
        let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 0..=60 {
            let p = tilt(&base, &reward, k as f64 * 0.1).unwrap();
            let now = (p.improvement(), p.kl());
            prop_assert!(now.0 >= last.0 - 1e-12 && now.1 >= last.1 - 1e-12, "{:?} after {:?}", now, last);
            last = now;
        }
    }

    #[test]
    fn tilt_is_the_penalized_optimum(
        (base, reward) in instance(1..=10),
        beta in 0.05f64..5.0,
        nu in prop::collection::vec(0.0f64..1.0, 10),
    ) {
        let k = base.len();
        let nu = normalize(nu[..k].iter().map(|x| x + 1e-3).collect());
        let nu = dist(nu);
        let p = tilt(&base, &reward, beta).unwrap();
        let objective = |law: &FiniteDist| law.expect(&reward).unwrap() - kl(law, &base).unwrap() / beta;
        prop_assert!(objective(&nu) <= objective(p.law()) + 1e-10);
    }

    #[test]
    fn solve_then_recompute((base, reward) in instance(2..=12), fraction in 0.01f64..0.98) {
        prop_assume!(!reward.is_constant());
        let top = kl_max(&base, &reward).unwrap();
        let delta = fraction * top;
        let (policy, r) = tilt_for_budget(&base, &reward, delta).unwrap();
        let recomputed = kl(policy.law(), &base).unwrap();
        prop_assert!((recomputed - delta).abs() <= residual_tolerance(delta), "{recomputed} vs {delta}");
        prop_assert_eq!(policy.kl_cap(), delta);
        prop_assert!(r.beta > 0.0);
    }
}
