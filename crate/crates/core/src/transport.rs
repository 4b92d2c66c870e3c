//! Tail certificates and transportation inequalities for reward improvement.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dist::{pushforward, FiniteDist, InverseCdfSampler, Policy, RewardLaw, RewardMap};
use crate::divergence::{self, golden_section_max};
use crate::error::{Error, Result};
use crate::math::{abs, exp, ln, powf, sqrt};
use crate::rng::RngSeed;
use crate::tilt;

/// Envelope on the centered log-MGF `ψ(λ) = ln E e^{λ(X - EX)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `ψ(λ) <= λ² σ² / 2` for all `λ`.
    SubGaussian { variance: f64 },
    /// `ψ(λ) <= λ² σ² / (2(1 - cλ))` for `0 < λ < 1/c`.
    SubGamma { variance: f64, scale: f64 },
}

impl TailModel {
    pub fn sub_gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(TailModel::SubGaussian { variance })
    }

    pub fn sub_gamma(variance: f64, scale: f64) -> Result<Self> {
        check_variance(variance)?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param("scale", format!("{scale} must be positive")));
        }
        Ok(TailModel::SubGamma { variance, scale })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            TailModel::SubGaussian { variance } | TailModel::SubGamma { variance, .. } => variance,
        }
    }

    /// Envelope at `λ`, or `None` outside the model's domain. Negative `λ`
    /// uses the mirrored envelope for sub-Gamma.
    pub fn envelope(&self, lambda: f64) -> Option<f64> {
        match *self {
            TailModel::SubGaussian { variance } => Some(0.5 * lambda * lambda * variance),
            TailModel::SubGamma { variance, scale } => {
                let t = abs(lambda);
                if scale * t >= 1.0 {
                    None
                } else {
                    Some(0.5 * t * t * variance / (1.0 - scale * t))
                }
            }
        }
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param("variance", format!("{variance} must be positive")));
    }
    Ok(())
}

/// Half-width of the default certification grid.
pub const DEFAULT_LAMBDA_MAX: f64 = 20.0;
/// Size of the default certification grid.
pub const DEFAULT_GRID_SIZE: usize = 4001;

/// Symmetric grid of `count` points on `[-max, max]`: zero plus geometric
/// spacing over six decades on each side.
pub fn lambda_grid(max: f64, count: usize) -> Result<Vec<f64>> {
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::param("lambda_max", format!("{max} must be positive")));
    }
    if count < 3 || count.is_multiple_of(2) {
        return Err(Error::param("grid_size", "must be odd and at least 3"));
    }
    let half = (count - 1) / 2;
    let mut positive: Vec<f64> = (1..=half)
        .map(|k| {
            let frac = if half == 1 { 1.0 } else { (k - 1) as f64 / (half - 1) as f64 };
            max * powf(10.0, -6.0 * (1.0 - frac))
        })
        .collect();
    positive[half - 1] = max;
    let mut grid: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
    grid.push(0.0);
    grid.extend(positive);
    Ok(grid)
}

pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(DEFAULT_LAMBDA_MAX, DEFAULT_GRID_SIZE).expect("valid default grid")
}

/// Envelope check of a centered log-MGF on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCertificate {
    pub model: TailModel,
    pub grid: Vec<f64>,
    /// `max (ψ(λ) - envelope(λ))` over the checked points.
    pub max_violation: f64,
    pub passed: bool,
    /// Grid points outside the model's domain.
    pub skipped: usize,
    pub note: Option<String>,
}

/// Absolute slack allowed between `ψ` and its envelope.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-12;

/// Checks `ψ <= envelope` on `grid`. Sub-Gamma models check `λ > 0` only,
/// unless `two_sided`.
pub fn certify_tail<F: Fn(f64) -> f64>(psi: F, model: TailModel, grid: &[f64], two_sided: bool) -> TailCertificate {
    let mut max_violation = f64::NEG_INFINITY;
    let mut skipped = 0;
    let one_sided = matches!(model, TailModel::SubGamma { .. }) && !two_sided;
    for &lambda in grid {
        if one_sided && lambda < 0.0 {
            skipped += 1;
            continue;
        }
        let Some(env) = model.envelope(lambda) else {
            skipped += 1;
            continue;
        };
        let violation = psi(lambda) - env;
        if violation.is_nan() {
            max_violation = f64::INFINITY;
        } else {
            max_violation = max_violation.max(violation);
        }
    }
    let note = (skipped > 0).then(|| format!("{skipped} grid points outside the envelope domain were skipped"));
    TailCertificate {
        model,
        grid: grid.to_vec(),
        max_violation,
        passed: max_violation <= CERTIFICATE_TOLERANCE,
        skipped,
        note,
    }
}

/// Certifies the pushforward of a finite law on the default grid.
pub fn certify_finite(law: &RewardLaw, model: TailModel) -> TailCertificate {
    certify_tail(|l| law.centered_log_mgf(l), model, &default_lambda_grid(), false)
}

/// Points per sign of the spread-scaled search grid.
const SCALED_POINTS: usize = 2001;

/// Smallest sub-Gaussian variance of a finite law; it certifies on the default grid.
///
/// `2ψ(λ)/λ²` peaks near `|λ| ≈ 2 ln(1/p_min) / spread`, beyond `|λ| = 20` for
/// narrow laws, so the search also covers `|λ| · spread ∈ [1e-3, 1e4]`.
/// Without it a narrow law gets a variance that fails off the grid.
pub fn min_subgauss_sigma2(law: &RewardLaw) -> f64 {
    let values = law.values();
    let spread = values[values.len() - 1] - values[0];
    let mut grid = default_lambda_grid();
    if spread > 0.0 {
        let (lo, hi) = (ln(1e-3), ln(1e4));
        for k in 0..SCALED_POINTS {
            let l = exp(lo + (hi - lo) * k as f64 / (SCALED_POINTS - 1) as f64) / spread;
            grid.push(l);
            grid.push(-l);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    min_subgauss_sigma2_with(|l| law.centered_log_mgf(l), law.variance(), &grid)
}

/// `max(variance, sup_λ 2ψ(λ)/λ²)` over `grid`, refined around the best point.
///
/// `variance` is the `λ → 0` limit of `2ψ/λ²`.
pub fn min_subgauss_sigma2_with<F: Fn(f64) -> f64>(psi: F, variance: f64, grid: &[f64]) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let ratio = |l: f64| if l == 0.0 { variance } else { 2.0 * psi(l) / (l * l) };
    let mut best = variance;
    let mut best_index = None;
    for (i, &l) in grid.iter().enumerate() {
        let r = ratio(l);
        if r > best {
            best = r;
            best_index = Some(i);
        }
    }
    if let Some(i) = best_index {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let refined = golden_section_max(&ratio, lo, hi, 200);
        best = best.max(ratio(refined));
    }
    // Rounding in ψ must not leave a grid point above the envelope.
    best * (1.0 + 4.0 * f64::EPSILON)
}

/// `ψ*^{-1}(kl)`: `√(2σ² kl)` and, for sub-Gamma, `+ c kl`.
pub fn transport_bound(kl: f64, model: TailModel) -> Result<f64> {
    if !(kl >= 0.0) {
        return Err(Error::param("kl", format!("{kl} must be nonnegative")));
    }
    Ok(match model {
        TailModel::SubGaussian { variance } => sqrt(2.0 * variance * kl),
        TailModel::SubGamma { variance, scale } => sqrt(2.0 * variance * kl) + scale * kl,
    })
}

/// The bounded-reward comparison `√(2 ‖r‖²_∞ kl)`.
pub fn bounded_reward_bound(kl: f64, sup_norm: f64) -> f64 {
    sqrt(2.0 * sup_norm * sup_norm * kl)
}

/// `0 <= improvement <= √(2σ² KL) <= √(2σ² cap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementChain {
    pub improvement: f64,
    pub kl: f64,
    pub kl_bound: f64,
    pub cap: f64,
    pub cap_bound: f64,
    pub holds: bool,
}

/// Certifies `r(base)` as sub-Gaussian with `variance`, then evaluates the chain.
pub fn check_corollary1<P: Policy + ?Sized>(policy: &P, variance: f64) -> Result<ImprovementChain> {
    let law = pushforward(policy.base(), policy.reward())?;
    let model = TailModel::sub_gaussian(variance)?;
    let cert = certify_finite(&law, model);
    if !cert.passed {
        return Err(Error::TailHypothesis(format!(
            "sub-Gaussian variance {variance} violated by {}",
            cert.max_violation
        )));
    }
    let improvement = policy.improvement();
    let kl = policy.kl_to_base();
    let cap = policy.kl_cap();
    let kl_bound = sqrt(2.0 * variance * kl);
    let cap_bound = sqrt(2.0 * variance * cap);
    let tol = crate::report::SLACK_TOLERANCE;
    Ok(ImprovementChain {
        improvement,
        kl,
        kl_bound,
        cap,
        cap_bound,
        holds: improvement >= -tol && improvement <= kl_bound + tol && kl <= cap + tol,
    })
}

/// Orders on `(0, 1)` used by default for the tail-adaptive bound.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailAdaptiveBound {
    /// Minimizing grid order, if any grid point was finite.
    pub best_alpha: Option<f64>,
    /// Minimum of the bound over the interior grid.
    pub interior_min: f64,
    /// `α → 1`: `√(2σ²_ref KL(π ‖ base))`.
    pub kl_endpoint: f64,
    /// `α → 0`: `√(2σ²_π KL(base ‖ π))`.
    pub reverse_endpoint: f64,
    /// Minimum of the interior and both endpoints.
    pub bound: f64,
}

/// Evaluates `√(2((1-α)σ²_π + ασ²_ref) D_α/α)` given `D_α` and both KLs.
pub fn tail_adaptive_from<F: Fn(f64) -> Result<f64>>(
    renyi_at: F,
    kl_forward: f64,
    kl_reverse: f64,
    variance_pi: f64,
    variance_ref: f64,
    alphas: &[f64],
) -> Result<TailAdaptiveBound> {
    if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::param("alpha", "grid must lie in (0, 1)"));
    }
    let mut best_alpha = None;
    let mut interior_min = f64::INFINITY;
    for &alpha in alphas {
        let d = renyi_at(alpha)?;
        if !d.is_finite() {
            continue;
        }
        let weight = (1.0 - alpha) * variance_pi + alpha * variance_ref;
        let value = sqrt(2.0 * weight * d.max(0.0) / alpha);
        if value < interior_min {
            interior_min = value;
            best_alpha = Some(alpha);
        }
    }
    let kl_endpoint = sqrt(2.0 * variance_ref * kl_forward);
    let reverse_endpoint = sqrt(2.0 * variance_pi * kl_reverse);
    Ok(TailAdaptiveBound {
        best_alpha,
        interior_min,
        kl_endpoint,
        reverse_endpoint,
        bound: interior_min.min(kl_endpoint).min(reverse_endpoint),
    })
}

/// Tail-adaptive bound on `E_π r - E_base r` for finite laws.
///
/// Both pushforwards must be certified sub-Gaussian at the given variances.
pub fn tail_adaptive_bound(
    pi: &FiniteDist,
    base: &FiniteDist,
    reward: &RewardMap,
    variance_pi: f64,
    variance_ref: f64,
    alphas: &[f64],
) -> Result<TailAdaptiveBound> {
    for (law, variance, who) in [(pi, variance_pi, "policy"), (base, variance_ref, "reference")] {
        let cert = certify_finite(&pushforward(law, reward)?, TailModel::sub_gaussian(variance)?);
        if !cert.passed {
            return Err(Error::TailHypothesis(format!(
                "{who} reward law is not sub-Gaussian with variance {variance}"
            )));
        }
    }
    let kl_forward = divergence::kl(pi, base)?;
    let kl_reverse = divergence::kl(base, pi)?;
    tail_adaptive_from(
        |a| Ok(divergence::renyi(pi, base, a)?.value),
        kl_forward,
        kl_reverse,
        variance_pi,
        variance_ref,
        alphas,
    )
}

/// One configured experiment of the high-probability empirical bound.
#[derive(Debug, Clone)]
pub struct HighProbSetup {
    pub beta: f64,
    pub m: usize,
    pub t0: f64,
    pub variance_ref: f64,
    pub kl: f64,
    pub renyi: f64,
    /// `√(2σ² KL) + (D_β - KL)/β + 2 t₀`.
    pub threshold: f64,
    /// `e^{-m t₀²/(2σ²)} + e^{-m(β-1) t₀}`.
    pub theoretical_rate: f64,
    policy_sampler: InverseCdfSampler,
    base_sampler: InverseCdfSampler,
    rewards: Vec<f64>,
}

impl HighProbSetup {
    /// Requires `β > 1`, `m >= 1`, `t₀ > 0` and a certified sub-Gaussian base.
    pub fn new(base: &FiniteDist, reward: &RewardMap, beta: f64, m: usize, t0: f64, variance_ref: f64) -> Result<Self> {
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(Error::param("beta", format!("{beta} must exceed 1")));
        }
        if m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if !(t0 > 0.0) {
            return Err(Error::param("t0", format!("{t0} must be positive")));
        }
        let model = TailModel::sub_gaussian(variance_ref)?;
        let cert = certify_finite(&pushforward(base, reward)?, model);
        if !cert.passed {
            return Err(Error::TailHypothesis(format!(
                "reference reward law is not sub-Gaussian with variance {variance_ref}"
            )));
        }
        let policy = tilt::tilt(base, reward, beta)?;
        let kl = policy.kl();
        let renyi = divergence::renyi(policy.law(), base, beta)?.value;
        let mf = m as f64;
        let threshold = sqrt(2.0 * variance_ref * kl) + (renyi - kl) / beta + 2.0 * t0;
        let theoretical_rate =
            exp(-mf * t0 * t0 / (2.0 * variance_ref)) + exp(-mf * (beta - 1.0) * t0);
        Ok(HighProbSetup {
            beta,
            m,
            t0,
            variance_ref,
            kl,
            renyi,
            threshold,
            theoretical_rate,
            policy_sampler: InverseCdfSampler::new(policy.law().probs()),
            base_sampler: InverseCdfSampler::new(base.probs()),
            rewards: reward.values().to_vec(),
        })
    }

    /// Whether trial `index` violates the bound; it uses stream `index` of `seed`.
    pub fn trial_violates(&self, seed: RngSeed, index: u64) -> bool {
        let mut stream = seed.stream(index);
        let mut policy_sum = 0.0;
        for _ in 0..self.m {
            policy_sum += self.rewards[self.policy_sampler.draw(&mut stream)];
        }
        let mut base_sum = 0.0;
        for _ in 0..self.m {
            base_sum += self.rewards[self.base_sampler.draw(&mut stream)];
        }
        (policy_sum - base_sum) / self.m as f64 > self.threshold
    }

    /// `(rate, standard error)` given the violation count.
    pub fn summarize(&self, violations: u64, trials: u64) -> HighProbOutcome {
        let th = self.theoretical_rate.min(1.0);
        let se = sqrt(th * (1.0 - th) / trials as f64);
        let empirical_rate = violations as f64 / trials as f64;
        HighProbOutcome {
            violations,
            trials,
            empirical_rate,
            theoretical_rate: self.theoretical_rate,
            standard_error: se,
            within_bound: empirical_rate <= self.theoretical_rate + 3.0 * se,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighProbOutcome {
    pub violations: u64,
    pub trials: u64,
    pub empirical_rate: f64,
    pub theoretical_rate: f64,
    /// `√(θ(1-θ)/trials)` at the theoretical rate `θ`.
    pub standard_error: f64,
    /// `empirical <= theoretical + 3 SE`.
    pub within_bound: bool,
}

/// Runs `trials` trials serially. Trial `k` uses stream `k` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn high_prob_trial(
    base: &FiniteDist,
    reward: &RewardMap,
    beta: f64,
    m: usize,
    t0: f64,
    trials: u64,
    seed: RngSeed,
    variance_ref: f64,
) -> Result<HighProbOutcome> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let setup = HighProbSetup::new(base, reward, beta, m, t0, variance_ref)?;
    let violations = (0..trials).filter(|&k| setup.trial_violates(seed, k)).count() as u64;
    Ok(setup.summarize(violations, trials))
}
