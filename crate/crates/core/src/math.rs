// Thin wrappers over libm so the crate builds without std.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// `ln Σ exp(a_i)`, with `-inf` for an empty or all `-inf` input.
pub(crate) fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64> + Clone,
{
    let max = terms
        .clone()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = terms.into_iter().map(|a| exp(a - max)).sum();
    max + ln(s)
}

/// `ln Σ w_i exp(a_i)` restricted to `w_i > 0`.
pub(crate) fn log_weighted_sum_exp(weights: &[f64], exponents: &[f64]) -> f64 {
    log_sum_exp(
        weights
            .iter()
            .zip(exponents)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, a)| ln(*w) + a),
    )
}

/// `ln E_w exp(t (x - E_w x))` evaluated without cancellation for small `t`.
pub(crate) fn centered_log_mgf(weights: &[f64], values: &[f64], t: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean: f64 = weights
        .iter()
        .zip(values)
        .map(|(w, x)| w * x)
        .sum::<f64>()
        / total;
    let spread = weights
        .iter()
        .zip(values)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, x)| abs(x - mean))
        .fold(0.0, f64::max);
    if abs(t) * spread <= 1.0 {
        let s: f64 = weights
            .iter()
            .zip(values)
            .map(|(w, x)| w * expm1(t * (x - mean)))
            .sum::<f64>()
            / total;
        ln_1p(s)
    } else {
        let exps: alloc::vec::Vec<f64> = values.iter().map(|x| t * (x - mean)).collect();
        log_weighted_sum_exp(weights, &exps) - ln(total)
    }
}
