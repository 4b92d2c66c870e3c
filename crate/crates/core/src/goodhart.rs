//! Transfer of reward-improvement bounds from a proxy reward to a golden one.

use alloc::format;
use alloc::vec::Vec;

use crate::bestofn::{bestofn_exact, exp_reference_kl, tv_bound};
use crate::dist::{pushforward, FiniteDist, Policy, RewardMap};
use crate::error::{Error, Result};
use crate::math::{abs, centered_log_mgf, ln, log_weighted_sum_exp, sqrt};
use crate::report::{BoundReport, SLACK_TOLERANCE};
use crate::tilt::tilt;
use crate::transport::{certify_finite, TailModel};

/// A proxy reward and the golden reward it approximates.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPair {
    proxy: RewardMap,
    golden: RewardMap,
    eps: f64,
}

impl RewardPair {
    /// `eps = max_i |proxy_i - golden_i|` is always recomputed here.
    pub fn new(proxy: RewardMap, golden: RewardMap) -> Result<Self> {
        if proxy.len() != golden.len() {
            return Err(Error::RewardSupportMismatch {
                rewards: golden.len(),
                symbols: proxy.len(),
            });
        }
        let eps = proxy
            .values()
            .iter()
            .zip(golden.values())
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max);
        Ok(RewardPair { proxy, golden, eps })
    }

    pub fn proxy(&self) -> &RewardMap {
        &self.proxy
    }

    pub fn golden(&self) -> &RewardMap {
        &self.golden
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn check(&self, base: &FiniteDist) -> Result<()> {
        self.proxy.check(base)?;
        self.golden.check(base)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} must be positive")));
    }
    Ok(())
}

/// `(1/t) ln E_ν e^{t g}`, a soft maximum of `g` on the support of `ν`.
///
/// Tends to `E_ν g` as `t → 0` and to `max_{supp ν} g` as `t → ∞`.
pub fn softmax_interpolation(nu: &FiniteDist, g: &[f64], t: f64) -> Result<f64> {
    if g.len() != nu.len() {
        return Err(Error::RewardSupportMismatch {
            rewards: g.len(),
            symbols: nu.len(),
        });
    }
    check_beta(t)?;
    let exps: Vec<f64> = g.iter().map(|x| t * x).collect();
    Ok(log_weighted_sum_exp(nu.probs(), &exps) / t)
}

/// `(1/β) ln ∫ e^{β(r - r* - (E_base r - E_base r*))} dπ_{β,r*}`.
///
/// Evaluated as `(ψ_r(β) - ψ_{r*}(β))/β` with centered log-MGFs under `base`,
/// which is exactly zero when the two rewards coincide.
pub fn interpolation_term(base: &FiniteDist, pair: &RewardPair, beta: f64) -> Result<f64> {
    pair.check(base)?;
    check_beta(beta)?;
    let probs = base.probs();
    let proxy = centered_log_mgf(probs, pair.proxy.values(), beta);
    let golden = centered_log_mgf(probs, pair.golden.values(), beta);
    Ok((proxy - golden) / beta)
}

/// Golden improvement of the proxy tilt against its exact transfer bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub report: BoundReport,
    pub proxy_improvement: f64,
    pub interpolation: f64,
}

/// `E_{π_{β,r}} r* - E r* <= (E_{π_{β,r}} r - E r) - interpolation`.
pub fn rl_transfer_check(base: &FiniteDist, pair: &RewardPair, beta: f64) -> Result<TransferReport> {
    let interpolation = interpolation_term(base, pair, beta)?;
    let policy = tilt(base, &pair.proxy, beta)?;
    let proxy_improvement = policy.improvement();
    let golden_improvement = golden_improvement(base, policy.law(), &pair.golden);
    Ok(TransferReport {
        report: BoundReport::new("rl_transfer", 0, proxy_improvement - interpolation, golden_improvement),
        proxy_improvement,
        interpolation,
    })
}

fn golden_improvement(base: &FiniteDist, law: &FiniteDist, golden: &RewardMap) -> f64 {
    law.probs()
        .iter()
        .zip(base.probs())
        .zip(golden.values())
        .map(|((p, q), r)| (p - q) * r)
        .sum()
}

fn certify_proxy(base: &FiniteDist, pair: &RewardPair, variance: f64) -> Result<()> {
    let cert = certify_finite(&pushforward(base, &pair.proxy)?, TailModel::sub_gaussian(variance)?);
    if cert.passed {
        Ok(())
    } else {
        Err(Error::TailHypothesis(format!(
            "proxy reward law is not sub-Gaussian with variance {variance}"
        )))
    }
}

/// Outcome of the overestimation-margin bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub delta: f64,
    pub interpolation: f64,
    /// `KL(π_{β,r*} ‖ base)`.
    pub golden_kl: f64,
    /// `KL(π_{β,r} ‖ base)`.
    pub proxy_kl: f64,
    /// `interpolation >= δ · golden_kl`.
    pub hypothesis_met: bool,
    /// Measured `interpolation / golden_kl`, the largest admissible `δ`.
    pub max_valid_delta: f64,
    pub golden_improvement: f64,
    /// `√(2σ² proxy_kl) - δ golden_kl`.
    pub bound: f64,
    /// `None` when the hypothesis is unmet and nothing is asserted.
    pub holds: Option<bool>,
}

/// Largest `δ` with `interpolation >= δ · KL(π_{β,r*} ‖ base)`.
pub fn max_valid_delta(base: &FiniteDist, pair: &RewardPair, beta: f64) -> Result<f64> {
    let interpolation = interpolation_term(base, pair, beta)?;
    let golden_kl = tilt(base, &pair.golden, beta)?.kl();
    Ok(ratio_or_limit(interpolation, golden_kl))
}

fn ratio_or_limit(interpolation: f64, golden_kl: f64) -> f64 {
    if golden_kl > 0.0 {
        interpolation / golden_kl
    } else if interpolation >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Golden improvement `<= √(2σ² KL(π_{β,r} ‖ base)) - δ KL(π_{β,r*} ‖ base)`,
/// asserted only when the `δ` hypothesis holds.
pub fn rl_transfer_delta_bound(
    base: &FiniteDist,
    pair: &RewardPair,
    beta: f64,
    delta: f64,
    variance_ref: f64,
) -> Result<DeltaReport> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("{delta} must be nonnegative")));
    }
    certify_proxy(base, pair, variance_ref)?;
    let interpolation = interpolation_term(base, pair, beta)?;
    let proxy_policy = tilt(base, &pair.proxy, beta)?;
    let golden_kl = tilt(base, &pair.golden, beta)?.kl();
    let proxy_kl = proxy_policy.kl();
    let hypothesis_met = interpolation >= delta * golden_kl;
    let golden_improvement = golden_improvement(base, proxy_policy.law(), &pair.golden);
    let bound = sqrt(2.0 * variance_ref * proxy_kl) - delta * golden_kl;
    Ok(DeltaReport {
        delta,
        interpolation,
        golden_kl,
        proxy_kl,
        hypothesis_met,
        max_valid_delta: ratio_or_limit(interpolation, golden_kl),
        golden_improvement,
        bound,
        holds: hypothesis_met.then_some(golden_improvement <= bound + SLACK_TOLERANCE),
    })
}

/// `E_{π^{(n)}_r} r* - E r* <= √(2σ²(ln n - (n-1)/n)) + 2ε TV(n)`.
pub fn bon_transfer_bound(base: &FiniteDist, pair: &RewardPair, n: u64, variance_ref: f64) -> Result<BoundReport> {
    pair.check(base)?;
    certify_proxy(base, pair, variance_ref)?;
    let policy = bestofn_exact(base, &pair.proxy, n)?;
    let achieved = golden_improvement(base, policy.law(), &pair.golden);
    Ok(BoundReport::new("bon_transfer", n, bon_golden_bound(pair.eps, n, variance_ref), achieved))
}

fn bon_golden_bound(eps: f64, n: u64, variance_ref: f64) -> f64 {
    sqrt(2.0 * variance_ref * exp_reference_kl(n)) + 2.0 * eps * tv_bound(n)
}

/// Control axis of an over-optimization curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Beta(Vec<f64>),
    N(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub control: f64,
    pub kl: f64,
    pub proxy_improvement: f64,
    pub golden_improvement: f64,
    /// `√(2σ² kl)`.
    pub proxy_bound: f64,
    /// `√(2σ² kl) - interpolation` along `β`; the best-of-n transfer bound along `n`.
    pub golden_bound: f64,
}

/// Synthetic proxy-vs-golden improvement curve.
#[derive(Debug, Clone, PartialEq)]
pub struct OveroptCurve {
    pub rows: Vec<CurveRow>,
    /// Always true: curves come from configured rewards, not trained models.
    pub synthetic: bool,
}

pub fn overopt_curve(base: &FiniteDist, pair: &RewardPair, control: &Control, variance_ref: f64) -> Result<OveroptCurve> {
    pair.check(base)?;
    certify_proxy(base, pair, variance_ref)?;
    let rows = match control {
        Control::Beta(betas) => betas
            .iter()
            .map(|&beta| beta_row(base, pair, beta, variance_ref))
            .collect::<Result<Vec<_>>>()?,
        Control::N(ns) => ns
            .iter()
            .map(|&n| n_row(base, pair, n, variance_ref))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(OveroptCurve { rows, synthetic: true })
}

/// One row of the `β` curve.
pub fn beta_row(base: &FiniteDist, pair: &RewardPair, beta: f64, variance_ref: f64) -> Result<CurveRow> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} must be nonnegative")));
    }
    let policy = tilt(base, &pair.proxy, beta)?;
    let kl = policy.kl();
    let interpolation = if beta == 0.0 { 0.0 } else { interpolation_term(base, pair, beta)? };
    let proxy_bound = sqrt(2.0 * variance_ref * kl);
    Ok(CurveRow {
        control: beta,
        kl,
        proxy_improvement: policy.improvement(),
        golden_improvement: golden_improvement(base, policy.law(), &pair.golden),
        proxy_bound,
        golden_bound: proxy_bound - interpolation,
    })
}

/// One row of the `n` curve.
pub fn n_row(base: &FiniteDist, pair: &RewardPair, n: u64, variance_ref: f64) -> Result<CurveRow> {
    let policy = bestofn_exact(base, &pair.proxy, n)?;
    let kl = policy.kl_to_base();
    Ok(CurveRow {
        control: n as f64,
        kl,
        proxy_improvement: policy.improvement(),
        golden_improvement: golden_improvement(base, policy.law(), &pair.golden),
        proxy_bound: sqrt(2.0 * variance_ref * kl),
        golden_bound: bon_golden_bound(pair.eps, n, variance_ref),
    })
}

/// `max_{supp ν} g`.
pub fn support_max(nu: &FiniteDist, g: &[f64]) -> f64 {
    nu.probs()
        .iter()
        .zip(g)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, x)| *x)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ln(1/ν(argmax g))`, the scale of the soft-max gap at large `t`.
pub fn support_max_log_mass(nu: &FiniteDist, g: &[f64]) -> f64 {
    let top = support_max(nu, g);
    let mass: f64 = nu
        .probs()
        .iter()
        .zip(g)
        .filter(|(_, x)| **x == top)
        .map(|(p, _)| p)
        .sum();
    -ln(mass)
}
