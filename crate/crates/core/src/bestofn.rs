//! Exact best-of-n laws on finite alphabets and the divergence bound catalog.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::dist::{pushforward, FiniteDist, Policy, RewardMap};
use crate::divergence::{self, FGenerator, RENYI_KL_WINDOW};
use crate::error::{Error, Result};
use crate::math::{abs, ceil, exp, expm1, floor, ln, ln_1p, sqrt};
use crate::quadrature::Quadrature;
use crate::report::BoundReport;
use crate::tilt;

/// Law of the highest-reward draw among `n` i.i.d. draws from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestOfNPolicy {
    n: u64,
    base: FiniteDist,
    reward: RewardMap,
    law: FiniteDist,
}

impl BestOfNPolicy {
    pub fn n(&self) -> u64 {
        self.n
    }
}

impl Policy for BestOfNPolicy {
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
        exp_reference_kl(self.n)
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// `F^n - (F - P)^n` for `0 < P <= F <= 1`.
fn class_mass(cumulative: f64, class: f64, n: f64) -> f64 {
    let top = exp(n * ln(cumulative));
    let ratio = (class / cumulative).min(1.0);
    top * -expm1(n * ln_1p(-ratio))
}

/// Best-of-n selection law.
///
/// Symbols are grouped into classes of equal reward. A class `C` with mass
/// `P_C` and inclusive cumulative mass `F_C` is selected with probability
/// `F_C^n - (F_C - P_C)^n`, split inside the class in proportion to `base`
/// (uniform tie-breaking over the maximizing sample indices).
pub fn bestofn_exact(base: &FiniteDist, reward: &RewardMap, n: u64) -> Result<BestOfNPolicy> {
    check_n(n)?;
    reward.check(base)?;
    if n == 1 {
        return Ok(BestOfNPolicy {
            n,
            law: base.clone(),
            base: base.clone(),
            reward: reward.clone(),
        });
    }
    let probs = base.probs();
    let values = reward.values();
    let mut order: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = order.iter().map(|&i| probs[i]).sum();
    let mut law = alloc::vec![0.0; probs.len()];
    let nf = n as f64;
    let mut cumulative = 0.0;
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| values[i] == v).count();
        let class: f64 = order[start..end].iter().map(|&i| probs[i]).sum();
        cumulative += class;
        let f = if end == order.len() { 1.0 } else { (cumulative / total).min(1.0) };
        let mass = class_mass(f, class / total, nf);
        for &i in &order[start..end] {
            law[i] = mass * probs[i] / class;
        }
        start = end;
    }
    Ok(BestOfNPolicy {
        n,
        law: base.with_probs(law),
        base: base.clone(),
        reward: reward.clone(),
    })
}

/// `ln n - (n - 1)/n`, the KL between the max of `n` unit exponentials and one.
pub fn exp_reference_kl(n: u64) -> f64 {
    let n = n.max(1) as f64;
    ln(n) - (n - 1.0) / n
}

/// Exact `KL(π^{(n)} ‖ base)` against `ln n - (n-1)/n`.
pub fn bestofn_kl(base: &FiniteDist, reward: &RewardMap, n: u64) -> Result<BoundReport> {
    let policy = bestofn_exact(base, reward, n)?;
    Ok(BoundReport::new("kl", n, exp_reference_kl(n), policy.kl_to_base()))
}

/// `∫_0^1 f(n u^{n-1}) du`.
pub fn f_bound_generic(gen: &FGenerator, n: u64) -> Result<f64> {
    check_n(n)?;
    if n == 1 {
        return Ok(gen.eval(1.0));
    }
    let nf = n as f64;
    let log_ratio = |u: f64| ln(nf) + (nf - 1.0) * ln(u);
    // n u^{n-1} = 1 here; generators such as |x - 1| have a kink at one.
    let crossing = exp(-ln(nf) / (nf - 1.0));
    let quad = Quadrature::default();
    let integral = quad.integrate_with_breaks(|u| gen.eval_log(log_ratio(u)), 0.0, 1.0, &[crossing])?;
    Ok(integral.value)
}

/// Rényi analogue `(1/(α-1)) ln ∫_0^1 (n u^{n-1})^α du` by quadrature.
pub fn renyi_bound_generic(alpha: f64, n: u64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    if abs(alpha - 1.0) < RENYI_KL_WINDOW {
        return f_bound_generic(&FGenerator::kl(), n);
    }
    if n == 1 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let quad = Quadrature::default().with_rel_tol(1e-12);
    let integral = quad.integrate(|u| exp(alpha * (ln(nf) + (nf - 1.0) * ln(u))), 0.0, 1.0)?;
    Ok(ln(integral.value) / (alpha - 1.0))
}

/// Closed form of a catalog row: `kl`, `chi2`, `tv`, `hellinger`, `forward_kl` (or `fkl`).
pub fn f_bound_closed(name: &str, n: u64) -> Result<f64> {
    check_n(n)?;
    let gen = FGenerator::by_name(name)?;
    let nf = n as f64;
    Ok(match gen.name() {
        "kl" => exp_reference_kl(n),
        "chi2" => (nf - 1.0) * (nf - 1.0) / (2.0 * nf - 1.0),
        "tv" => tv_bound(n),
        "hellinger" => {
            let s = 1.0 - sqrt(nf);
            2.0 * s * s / (nf + 1.0)
        }
        "forward_kl" => nf - 1.0 - ln(nf),
        other => return Err(Error::UnknownDivergence(other.to_string())),
    })
}

/// `(1/n)^{1/(n-1)} - (1/n)^{n/(n-1)}`, zero at `n = 1`.
pub fn tv_bound(n: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    let base = exp(-ln(nf) / (nf - 1.0));
    base - base / nf
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", format!("{alpha} is outside (0, 1) ∪ (1, ∞)")));
    }
    Ok(())
}

/// `(1/(α-1)) ln(n^α / (α(n-1) + 1))`; KL row within `1e-6` of `α = 1`.
pub fn renyi_bound_closed(alpha: f64, n: u64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    if abs(alpha - 1.0) < RENYI_KL_WINDOW {
        return Ok(exp_reference_kl(n));
    }
    let nf = n as f64;
    Ok((alpha * ln(nf) - ln_1p(alpha * (nf - 1.0))) / (alpha - 1.0))
}

/// Exact divergences of `π^{(n)}` from `base` against every catalog row and
/// the Rényi bound at each requested order.
pub fn catalog_reports(policy: &BestOfNPolicy, alphas: &[f64]) -> Result<Vec<BoundReport>> {
    let n = policy.n;
    let mut out = Vec::with_capacity(5 + alphas.len());
    for gen in FGenerator::catalog() {
        let achieved = divergence::f_div(&policy.law, &policy.base, &gen)?.value;
        out.push(BoundReport::new(gen.name(), n, f_bound_closed(gen.name(), n)?, achieved));
    }
    for &alpha in alphas {
        let achieved = divergence::renyi(&policy.law, &policy.base, alpha)?.value;
        out.push(BoundReport::new(
            format!("renyi_{alpha}"),
            n,
            renyi_bound_closed(alpha, n)?,
            achieved,
        ));
    }
    Ok(out)
}

/// Outcome of the first-order dominance check.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub holds: bool,
    /// First probability level where the best-of-n quantile falls below the base one.
    pub first_violation: Option<f64>,
    /// First TVAR level where the best-of-n tail value is below the base one.
    pub first_tvar_violation: Option<f64>,
    pub levels_checked: usize,
}

/// Levels at which [`dominance_check`] compares tail values at risk.
pub const TVAR_LEVELS: usize = 100;

/// Checks that `r(π^{(n)})` first-order dominates `r(base)`: quantiles at every
/// step of either CDF, and TVAR on an even grid of `(0, 1]`.
pub fn dominance_check(base: &FiniteDist, reward: &RewardMap, n: u64) -> Result<DominanceReport> {
    let policy = bestofn_exact(base, reward, n)?;
    let lower = pushforward(base, reward)?;
    let upper = pushforward(&policy.law, reward)?;
    let mut levels: Vec<f64> = lower
        .cumulative()
        .iter()
        .chain(upper.cumulative())
        .map(|c| c.min(1.0))
        .collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut first_violation = None;
    let mut checked = 0;
    for w in levels.windows(2) {
        if w[1] - w[0] < 1e-12 {
            continue;
        }
        let p = 0.5 * (w[0] + w[1]);
        checked += 1;
        if upper.quantile(p)? < lower.quantile(p)? {
            first_violation = Some(p);
            break;
        }
    }
    let mut first_tvar_violation = None;
    for k in 1..=TVAR_LEVELS {
        let p = k as f64 / TVAR_LEVELS as f64;
        let (hi, lo) = (upper.tvar(p)?, lower.tvar(p)?);
        if hi < lo - 1e-12 * (1.0 + abs(lo)) {
            first_tvar_violation = Some(p);
            break;
        }
    }
    Ok(DominanceReport {
        holds: first_violation.is_none() && first_tvar_violation.is_none(),
        first_violation,
        first_tvar_violation,
        levels_checked: checked,
    })
}

/// Sample count used to compare best-of-n with the `Δ`-constrained tilt.
///
/// `⌈e^Δ⌉`, unless its KL bound `ln n - (n-1)/n` already exceeds `Δ`, in which
/// case `⌊e^Δ⌋` (at least one).
pub fn matched_sample_count(delta: f64) -> u64 {
    let target = exp(delta);
    let up = ceil(target) as u64;
    if exp_reference_kl(up) <= delta {
        up
    } else {
        (floor(target) as u64).max(1)
    }
}

/// `KL(π^{(n)} ‖ π_{λ_Δ})` against `√(2π) M (e^{2M/λ_Δ} - 1)/λ_Δ · e^{-Δ/2}`.
pub fn bnrl_gap(base: &FiniteDist, reward: &RewardMap, delta: f64) -> Result<BoundReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("{delta} must be positive")));
    }
    let n = matched_sample_count(delta);
    let best = bestofn_exact(base, reward, n)?;
    let (tilted, solved) = tilt::tilt_for_budget(base, reward, delta)?;
    let achieved = divergence::kl(best.law(), tilted.law())?;
    let m = reward.sup_norm();
    let beta = solved.beta;
    let bound = sqrt(2.0 * core::f64::consts::PI) * m * expm1(2.0 * m * beta) * beta * exp(-0.5 * delta);
    Ok(BoundReport::new("bnrl_gap", n, bound, achieved))
}
