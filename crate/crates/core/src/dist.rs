//! Finite laws, reward maps and the real-valued laws they push forward to.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;
use crate::rng::{RngSeed, Stream};

/// Allowed deviation of a probability vector's total from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "probability {p} is negative or not finite"
        )));
    }
    let total: f64 = probs.iter().sum();
    if abs(total - 1.0) > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// A probability law on a finite, labelled alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    support: Arc<[String]>,
    probs: Vec<f64>,
}

impl FiniteDist {
    /// Validates labels and probabilities. Inputs are never renormalized.
    pub fn new(support: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} symbols but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        check_probs(&probs)?;
        let mut sorted: Vec<&String> = support.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidDistribution(format!(
                "duplicate symbol `{}`",
                w[0]
            )));
        }
        Ok(FiniteDist {
            support: support.into(),
            probs,
        })
    }

    /// Law with symbols labelled `"0"`, `"1"`, ...
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let support = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(support, probs)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::from_probs(alloc::vec![1.0 / k as f64; k])
    }

    /// A law sharing `self`'s support. The caller guarantees `probs` is a
    /// computed probability vector (nonnegative, unit mass up to rounding).
    pub(crate) fn with_probs(&self, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), self.probs.len());
        FiniteDist {
            support: Arc::clone(&self.support),
            probs,
        }
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn same_support(&self, other: &FiniteDist) -> bool {
        Arc::ptr_eq(&self.support, &other.support) || self.support == other.support
    }

    pub(crate) fn ensure_same_support(&self, other: &FiniteDist) -> Result<()> {
        if self.same_support(other) {
            Ok(())
        } else {
            Err(Error::SupportMismatch)
        }
    }

    /// `E[r(Y)]` for `Y ~ self`.
    pub fn expect(&self, reward: &RewardMap) -> Result<f64> {
        reward.check(self)?;
        Ok(self.dot(reward.values()))
    }

    pub(crate) fn dot(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// One real reward per support symbol, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMap {
    values: Vec<f64>,
}

impl RewardMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("reward", format!("non-finite reward {v}")));
        }
        Ok(RewardMap { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_i |r_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| abs(*v)).fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub(crate) fn check(&self, dist: &FiniteDist) -> Result<()> {
        if self.values.len() == dist.len() {
            Ok(())
        } else {
            Err(Error::RewardSupportMismatch {
                rewards: self.values.len(),
                symbols: dist.len(),
            })
        }
    }
}

/// A finite law on the real line: strictly ascending atoms with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardLaw {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RewardLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::InvalidDistribution(
                "values and probabilities differ in length".into(),
            ));
        }
        check_probs(&probs)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite atom".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "atoms must be strictly ascending".into(),
            ));
        }
        Ok(Self::from_sorted(values, probs))
    }

    fn from_sorted(values: Vec<f64>, probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        // Mass is validated to 1e-12; the top atom closes the CDF exactly.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        RewardLaw {
            values,
            probs,
            cumulative,
        }
    }

    pub fn point_mass(value: f64) -> Self {
        Self::from_sorted(alloc::vec![value], alloc::vec![1.0])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inclusive partial sums `F` at each atom.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| v * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| p * (v - m) * (v - m))
            .sum()
    }

    /// Right-continuous step CDF `F(t) = P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.values.partition_point(|v| *v <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Generalized inverse `inf { t : F(t) >= p }`; `quantile(0)` is the smallest atom.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} is outside [0, 1]")));
        }
        let k = self.cumulative.partition_point(|c| *c < p);
        Ok(self.values[k.min(self.values.len() - 1)])
    }

    /// Tail value at risk `(1/p) ∫_0^p Q(t) dt`; `p = 1` gives the mean.
    pub fn tvar(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", format!("{p} is outside (0, 1]")));
        }
        let mut acc = 0.0;
        let mut lo = 0.0;
        for (v, hi) in self.values.iter().zip(&self.cumulative) {
            let top = hi.min(p);
            if top > lo {
                acc += v * (top - lo);
            }
            lo = *hi;
            if *hi >= p {
                return Ok(acc / p);
            }
        }
        // Rounding left the last partial sum just below p.
        acc += self.values[self.values.len() - 1] * (p - lo);
        Ok(acc / p)
    }

    /// Centered log-MGF `ψ(λ) = ln E exp(λ (X - E X))`.
    pub fn centered_log_mgf(&self, lambda: f64) -> f64 {
        crate::math::centered_log_mgf(&self.probs, &self.values, lambda)
    }
}

/// Law of `r(Y)` for `Y ~ dist`, atoms sorted ascending and equal rewards merged.
pub fn pushforward(dist: &FiniteDist, reward: &RewardMap) -> Result<RewardLaw> {
    reward.check(dist)?;
    let mut order: Vec<usize> = (0..dist.len()).filter(|&i| dist.probs[i] > 0.0).collect();
    order.sort_by(|&a, &b| reward.values[a].total_cmp(&reward.values[b]));
    let mut values: Vec<f64> = Vec::with_capacity(order.len());
    let mut probs: Vec<f64> = Vec::with_capacity(order.len());
    for i in order {
        let v = reward.values[i];
        match values.last() {
            Some(last) if *last == v => *probs.last_mut().unwrap() += dist.probs[i],
            _ => {
                values.push(v);
                probs.push(dist.probs[i]);
            }
        }
    }
    Ok(RewardLaw::from_sorted(values, probs))
}

/// Inverse-CDF sampler over symbol indices.
#[derive(Debug, Clone)]
pub struct InverseCdfSampler {
    cumulative: Vec<f64>,
}

impl InverseCdfSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        InverseCdfSampler { cumulative }
    }

    pub fn draw(&self, stream: &mut Stream) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = stream.uniform() * total;
        // u < total, so the first partial sum exceeding u exists and has positive mass.
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// `m` i.i.d. symbol indices drawn from `dist` on stream 0 of `seed`.
pub fn sample(dist: &FiniteDist, m: usize, seed: RngSeed) -> Vec<usize> {
    let sampler = InverseCdfSampler::new(dist.probs());
    let mut stream = seed.stream(0);
    (0..m).map(|_| sampler.draw(&mut stream)).collect()
}

/// A policy derived from a base law and a reward on the same support.
pub trait Policy {
    fn base(&self) -> &FiniteDist;
    fn reward(&self) -> &RewardMap;
    fn law(&self) -> &FiniteDist;

    /// The KL budget the construction guarantees: `Δ` for a constrained tilt,
    /// `ln n - (n-1)/n` for best-of-n.
    fn kl_cap(&self) -> f64;

    /// `E_law r - E_base r`.
    fn improvement(&self) -> f64 {
        self.law()
            .probs()
            .iter()
            .zip(self.base().probs())
            .zip(self.reward().values())
            .map(|((p, q), r)| (p - q) * r)
            .sum()
    }

    /// `KL(law ‖ base)`.
    fn kl_to_base(&self) -> f64 {
        self.law()
            .probs()
            .iter()
            .zip(self.base().probs())
            .map(|(&p, &q)| {
                if p == 0.0 {
                    0.0
                } else if q == 0.0 {
                    f64::INFINITY
                } else {
                    p * (crate::math::ln(p) - crate::math::ln(q))
                }
            })
            .sum::<f64>()
            .max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn uniform3() -> FiniteDist {
        FiniteDist::uniform(3).unwrap()
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(FiniteDist::from_probs(vec![0.5, 0.6]).is_err());
        assert!(FiniteDist::from_probs(vec![-0.1, 1.1]).is_err());
        assert!(FiniteDist::from_probs(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn rejects_duplicate_labels() {
        let e = FiniteDist::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]);
        assert!(matches!(e, Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn pushforward_injective() {
        let law = pushforward(&uniform3(), &RewardMap::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(law.values(), &[1.0, 2.0, 3.0]);
        for p in law.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pushforward_merges_ties() {
        let law = pushforward(&uniform3(), &RewardMap::new(vec![1.0, 1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(law.values(), &[1.0, 3.0]);
        assert!((law.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pushforward_constant_reward_is_point_mass() {
        let d = FiniteDist::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let law = pushforward(&d, &RewardMap::new(vec![5.0; 3]).unwrap()).unwrap();
        assert_eq!(law.values(), &[5.0]);
        assert!((law.probs()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pushforward_sorts_unsorted_rewards() {
        let d = FiniteDist::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let law = pushforward(&d, &RewardMap::new(vec![3.0, -1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(law.values(), &[-1.0, 2.0, 3.0]);
        assert_eq!(law.probs(), &[0.3, 0.5, 0.2]);
    }

    #[test]
    fn pushforward_length_mismatch() {
        let e = pushforward(&uniform3(), &RewardMap::new(vec![1.0, 2.0]).unwrap());
        assert!(matches!(e, Err(Error::RewardSupportMismatch { .. })));
        assert!(e.unwrap_err().to_string().contains("reward/support mismatch"));
    }

    #[test]
    fn quantile_step_boundary() {
        let law = RewardLaw::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(law.quantile(0.5).unwrap(), 0.0);
        assert_eq!(law.quantile(0.5 + 1e-9).unwrap(), 1.0);
        assert!(law.quantile(1.5).is_err());
        assert!(law.quantile(-0.1).is_err());
    }

    #[test]
    fn point_mass_quantile_everywhere() {
        let law = RewardLaw::point_mass(7.0);
        for p in [0.0, 0.1, 0.5, 0.99, 1.0] {
            assert_eq!(law.quantile(p).unwrap(), 7.0);
        }
    }

    #[test]
    fn cdf_partial_sum() {
        let law = pushforward(&uniform3(), &RewardMap::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert!((law.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(law.cdf(0.5), 0.0);
        assert!((law.cdf(10.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tvar_examples() {
        let c = RewardLaw::point_mass(4.5);
        for p in [0.01, 0.5, 1.0] {
            assert!((c.tvar(p).unwrap() - 4.5).abs() < 1e-15);
        }
        let b = RewardLaw::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((b.tvar(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(b.tvar(0.5).unwrap(), 0.0);
        assert!((b.tvar(0.75).unwrap() - 0.25 / 0.75).abs() < 1e-15);
        assert!(b.tvar(0.0).is_err());
        assert!(b.tvar(-1.0).is_err());
    }

    #[test]
    fn sample_point_mass() {
        let d = FiniteDist::from_probs(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(sample(&d, 10, RngSeed(3)), vec![1; 10]);
    }

    #[test]
    fn sample_uniform_binary_frequencies() {
        let d = FiniteDist::uniform(2).unwrap();
        let xs = sample(&d, 100_000, RngSeed(1));
        let ones = xs.iter().filter(|&&x| x == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01, "{ones}");
    }

    #[test]
    fn sample_is_deterministic() {
        let d = FiniteDist::from_probs(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(sample(&d, 500, RngSeed(9)), sample(&d, 500, RngSeed(9)));
        assert_ne!(sample(&d, 500, RngSeed(9)), sample(&d, 500, RngSeed(10)));
    }
}
