//! Exponentially tilted policies `π_β ∝ base · e^{β r}` and the KL-constrained solver.

use alloc::format;
use alloc::vec::Vec;

use crate::dist::{FiniteDist, Policy, RewardMap};
use crate::error::{Error, Result};
use crate::math::{abs, centered_log_mgf, exp, ln, log_weighted_sum_exp};

/// The penalized optimum `argmax_π E_π r - KL(π ‖ base) / β`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedPolicy {
    base: FiniteDist,
    reward: RewardMap,
    beta: f64,
    law: FiniteDist,
    log_partition: f64,
    kl: f64,
    budget: f64,
}

fn base_mean(base: &FiniteDist, reward: &RewardMap) -> f64 {
    base.dot(reward.values())
}

/// `KL(π_β ‖ base) = β E_{π_β}(r - E r) - ψ(β)` with `ψ` the centered log-MGF.
fn tilted_kl(base: &FiniteDist, reward: &RewardMap, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let probs = base.probs();
    let values = reward.values();
    let mean = base_mean(base, reward);
    let psi = centered_log_mgf(probs, values, beta);
    let exps: Vec<f64> = values.iter().map(|r| beta * (r - mean)).collect();
    let log_z = log_weighted_sum_exp(probs, &exps);
    let tilted_gap: f64 = probs
        .iter()
        .zip(&exps)
        .zip(values)
        .filter(|((p, _), _)| **p > 0.0)
        .map(|((p, e), r)| p * exp(e - log_z) * (r - mean))
        .sum();
    (beta * tilted_gap - psi).max(0.0)
}

/// Tilts `base` by `e^{β r}` in the log domain.
pub fn tilt(base: &FiniteDist, reward: &RewardMap, beta: f64) -> Result<TiltedPolicy> {
    reward.check(base)?;
    if !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} is not finite")));
    }
    let exps: Vec<f64> = reward.values().iter().map(|r| beta * r).collect();
    let log_partition = log_weighted_sum_exp(base.probs(), &exps);
    let probs: Vec<f64> = base
        .probs()
        .iter()
        .zip(&exps)
        .map(|(p, e)| if *p > 0.0 { p * exp(e - log_partition) } else { 0.0 })
        .collect();
    let kl = tilted_kl(base, reward, beta);
    Ok(TiltedPolicy {
        law: base.with_probs(probs),
        base: base.clone(),
        reward: reward.clone(),
        beta,
        log_partition,
        kl,
        budget: kl,
    })
}

impl TiltedPolicy {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln Σ base_i e^{β r_i}`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// `KL(law ‖ base)` from the centered identity.
    pub fn kl(&self) -> f64 {
        self.kl
    }
}

impl Policy for TiltedPolicy {
    fn base(&self) -> &FiniteDist {
        &self.base
    }

    fn reward(&self) -> &RewardMap {
        &self.reward
    }

    fn law(&self) -> &FiniteDist {
        &self.law
    }

    fn kl_cap(&self) -> f64 {
        self.budget
    }

    fn kl_to_base(&self) -> f64 {
        self.kl
    }
}

/// `sup_β KL(π_β ‖ base) = -ln base(argmax r)`, over symbols with positive mass.
pub fn kl_max(base: &FiniteDist, reward: &RewardMap) -> Result<f64> {
    reward.check(base)?;
    let top = base
        .probs()
        .iter()
        .zip(reward.values())
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, r)| *r)
        .fold(f64::NEG_INFINITY, f64::max);
    let mass: f64 = base
        .probs()
        .iter()
        .zip(reward.values())
        .filter(|(_, r)| **r == top)
        .map(|(p, _)| p)
        .sum();
    Ok((-ln(mass)).max(0.0))
}

/// Outcome of the KL-constrained solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSolveResult {
    pub delta: f64,
    /// `1/β`; infinite when `Δ = 0`.
    pub lambda: f64,
    pub beta: f64,
    /// `|KL(π_β) - Δ|`.
    pub residual: f64,
    pub iterations: u32,
}

/// Target accuracy of the constrained solve.
pub fn residual_tolerance(delta: f64) -> f64 {
    1e-9 * delta.max(1.0)
}

/// One prompt of a weighted family sharing a single multiplier.
#[derive(Debug, Clone, Copy)]
pub struct WeightedPrompt<'a> {
    pub weight: f64,
    pub base: &'a FiniteDist,
    pub reward: &'a RewardMap,
}

fn weighted_kl(prompts: &[WeightedPrompt<'_>], beta: f64) -> f64 {
    prompts
        .iter()
        .map(|p| p.weight * tilted_kl(p.base, p.reward, beta))
        .sum()
}

/// Smallest `β ≥ 0` with `KL(π_β ‖ base) = Δ`, reported with `λ_Δ = 1/β`.
pub fn solve_lambda(base: &FiniteDist, reward: &RewardMap, delta: f64) -> Result<ConstraintSolveResult> {
    solve_lambda_weighted(
        &[WeightedPrompt {
            weight: 1.0,
            base,
            reward,
        }],
        delta,
    )
}

/// Shared multiplier for `Σ_x w_x KL(π_{β,x} ‖ base_x) = Δ`.
///
/// Weights must be positive and sum to one within `1e-12`.
pub fn solve_lambda_weighted(prompts: &[WeightedPrompt<'_>], delta: f64) -> Result<ConstraintSolveResult> {
    if prompts.is_empty() {
        return Err(Error::param("prompts", "at least one prompt is required"));
    }
    let total: f64 = prompts.iter().map(|p| p.weight).sum();
    if prompts.iter().any(|p| !(p.weight > 0.0)) || abs(total - 1.0) > 1e-12 {
        return Err(Error::param("weight", "weights must be positive and sum to 1"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("{delta} must be a finite nonnegative number")));
    }
    let mut supremum = 0.0;
    let mut spread: f64 = 0.0;
    for p in prompts {
        supremum += p.weight * kl_max(p.base, p.reward)?;
        let live = p
            .base
            .probs()
            .iter()
            .zip(p.reward.values())
            .filter(|(q, _)| **q > 0.0)
            .map(|(_, r)| *r);
        let (lo, hi) = live.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));
        spread = spread.max(hi - lo);
    }
    let zero = ConstraintSolveResult {
        delta,
        lambda: f64::INFINITY,
        beta: 0.0,
        residual: 0.0,
        iterations: 0,
    };
    if delta == 0.0 {
        return Ok(zero);
    }
    if spread == 0.0 {
        return Err(Error::param("reward", "constant reward only admits delta = 0"));
    }
    if delta >= supremum {
        return Err(Error::Infeasible {
            target: delta,
            supremum,
        });
    }
    let tol = residual_tolerance(delta);
    let mut iterations = 0u32;
    let mut lo = 0.0;
    let mut hi = 1.0 / spread;
    while weighted_kl(prompts, hi) < delta {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() || iterations > 2_000 {
            return Err(Error::Solver("could not bracket the multiplier".into()));
        }
    }
    let mut beta = hi;
    let mut residual = abs(weighted_kl(prompts, hi) - delta);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let kl = weighted_kl(prompts, mid);
        let gap = abs(kl - delta);
        if gap < residual || (gap == residual && mid < beta) {
            beta = mid;
            residual = gap;
        }
        if kl < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if residual <= 1e-3 * tol {
            break;
        }
    }
    if residual > tol {
        return Err(Error::Solver(format!(
            "residual {residual} above tolerance {tol}"
        )));
    }
    Ok(ConstraintSolveResult {
        delta,
        lambda: 1.0 / beta,
        beta,
        residual,
        iterations,
    })
}

/// The tilt at the solved multiplier, with `Δ` as its KL budget.
pub fn tilt_for_budget(base: &FiniteDist, reward: &RewardMap, delta: f64) -> Result<(TiltedPolicy, ConstraintSolveResult)> {
    let solved = solve_lambda(base, reward, delta)?;
    let mut policy = tilt(base, reward, solved.beta)?;
    policy.budget = delta;
    Ok((policy, solved))
}

/// Tilt of `N(0, σ²)` by `e^{β x}`: the law is `N(βσ², σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTilt {
    pub improvement: f64,
    pub kl: f64,
}

pub fn gaussian_tilt_oracle(variance: f64, beta: f64) -> Result<GaussianTilt> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param("variance", format!("{variance} must be positive")));
    }
    if !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} is not finite")));
    }
    Ok(GaussianTilt {
        improvement: beta * variance,
        kl: 0.5 * beta * beta * variance,
    })
}
