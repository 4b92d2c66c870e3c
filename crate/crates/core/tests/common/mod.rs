#![allow(dead_code)]

use alignbounds_core::{FiniteDist, RewardMap};
use proptest::prelude::*;

/// Proptest settings without on-disk failure persistence.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Probability vector of length `k` with every entry positive.
pub fn probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(normalize)
}

/// Probability vector that may contain exact zeros.
pub fn sparse_probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.05f64..1.0], k)
        .prop_filter("some mass", |v| v.iter().any(|x| *x > 0.0))
        .prop_map(normalize)
}

pub fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    let mut out: Vec<f64> = v.iter().map(|x| x / total).collect();
    // Push rounding into the largest entry so the total is within tolerance.
    let (i, _) = out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let rest: f64 = out.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).sum();
    out[i] = 1.0 - rest;
    out
}

/// Rewards on a coarse grid so ties occur.
pub fn rewards(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-8i32..=8).prop_map(|x| x as f64 / 4.0), k)
}

pub fn dist(p: Vec<f64>) -> FiniteDist {
    FiniteDist::from_probs(p).unwrap()
}

pub fn reward(r: Vec<f64>) -> RewardMap {
    RewardMap::new(r).unwrap()
}

/// `(base, reward)` with support size in `sizes`.
pub fn instance(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (FiniteDist, RewardMap)> {
    sizes.prop_flat_map(|k| (probs(k), rewards(k))).prop_map(|(p, r)| (dist(p), reward(r)))
}

/// Two laws on a shared support of size in `sizes`.
pub fn pair(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (FiniteDist, FiniteDist)> {
    sizes
        .prop_flat_map(|k| (sparse_probs(k), sparse_probs(k)))
        .prop_map(|(p, q)| (dist(p), dist(q)))
}

/// Two laws with full support.
pub fn full_pair(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (FiniteDist, FiniteDist)> {
    sizes
        .prop_flat_map(|k| (probs(k), probs(k)))
        .prop_map(|(p, q)| (dist(p), dist(q)))
}
