//! Closed-form continuous laws: density, CDF and quantile triples.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{exp, expm1, ln, ln_1p, sqrt};
use crate::quadrature::Quadrature;
use crate::special;

/// A continuous law on the real line given in closed form.
pub trait ContinuousLaw {
    /// `ln` of the density; `-∞` outside the support.
    fn log_density(&self, x: f64) -> f64;

    fn cdf(&self, x: f64) -> f64;

    /// Inverse CDF on `(0, 1)`.
    fn quantile(&self, p: f64) -> f64;

    fn mean(&self) -> f64;

    /// `ln E exp(λ (X - E X))`, `+∞` where the MGF diverges.
    fn centered_log_mgf(&self, lambda: f64) -> f64;

    fn density(&self, x: f64) -> f64 {
        exp(self.log_density(x))
    }

    /// Tail value at risk `(1/p) ∫_0^p Q(t) dt` by quadrature of the quantile.
    fn tvar(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", format!("{p} is outside (0, 1]")));
        }
        let q = Quadrature::default().with_rel_tol(1e-12);
        let integral = q.integrate(|t| self.quantile(t), 0.0, p)?;
        Ok(integral.value / p)
    }
}

/// `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    mean: f64,
    variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
            return Err(Error::param("variance", format!("{variance} must be positive")));
        }
        Ok(Gaussian { mean, variance })
    }

    pub fn standard() -> Self {
        Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn sd(&self) -> f64 {
        sqrt(self.variance)
    }
}

impl ContinuousLaw for Gaussian {
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd();
        special::normal_log_pdf(z) - ln(self.sd())
    }

    fn cdf(&self, x: f64) -> f64 {
        special::normal_cdf((x - self.mean) / self.sd())
    }

    fn quantile(&self, p: f64) -> f64 {
        self.mean + self.sd() * special::normal_quantile(p)
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn centered_log_mgf(&self, lambda: f64) -> f64 {
        0.5 * lambda * lambda * self.variance
    }
}

/// Exponential law with the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("{rate} must be positive")));
        }
        Ok(Exponential { rate })
    }

    pub fn unit() -> Self {
        Exponential { rate: 1.0 }
    }
}

impl ContinuousLaw for Exponential {
    fn log_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            ln(self.rate) - self.rate * x
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -expm1(-self.rate * x)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        -ln_1p(-p) / self.rate
    }

    fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    fn centered_log_mgf(&self, lambda: f64) -> f64 {
        if lambda >= self.rate {
            f64::INFINITY
        } else {
            -ln_1p(-lambda / self.rate) - lambda / self.rate
        }
    }
}

/// Gamma law with shape `k` and scale `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma {
    shape: f64,
    scale: f64,
}

impl Gamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::param("shape", format!("{shape} must be positive")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", format!("{scale} must be positive")));
        }
        Ok(Gamma { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ContinuousLaw for Gamma {
    fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * ln(x) - x / self.scale
            - special::ln_gamma(self.shape)
            - self.shape * ln(self.scale)
    }

    fn cdf(&self, x: f64) -> f64 {
        special::gamma_p(self.shape, x / self.scale)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.scale * special::gamma_p_inverse(self.shape, p)
    }

    fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    fn centered_log_mgf(&self, lambda: f64) -> f64 {
        let t = self.scale * lambda;
        if t >= 1.0 {
            f64::INFINITY
        } else {
            -self.shape * ln_1p(-t) - self.shape * t
        }
    }
}

/// Law of the maximum of `n` i.i.d. unit exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpMax {
    n: u64,
}

/// The law of `max(E_1, ..., E_n)` for i.i.d. `E_i ~ Exp(1)`.
pub fn exp_order_stat_law(n: u64) -> Result<ExpMax> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(ExpMax { n })
}

impl ExpMax {
    pub fn n(&self) -> u64 {
        self.n
    }
}

impl ContinuousLaw for ExpMax {
    fn log_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let n = self.n as f64;
        if self.n == 1 {
            return -x;
        }
        ln(n) + (n - 1.0) * ln(-expm1(-x)) - x
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        exp(self.n as f64 * ln(-expm1(-x)))
    }

    fn quantile(&self, p: f64) -> f64 {
        // 1 - e^{-x} = p^{1/n}
        let root = exp(ln(p) / self.n as f64);
        -ln_1p(-root)
    }

    /// Harmonic number `H_n` (Rényi representation: `E^{(n)} = Σ E_i / i`).
    fn mean(&self) -> f64 {
        (1..=self.n).map(|i| 1.0 / i as f64).sum()
    }

    fn centered_log_mgf(&self, lambda: f64) -> f64 {
        if lambda >= 1.0 {
            return f64::INFINITY;
        }
        (1..=self.n)
            .map(|i| {
                let i = i as f64;
                -ln_1p(-lambda / i) - lambda / i
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_round_trip<L: ContinuousLaw>(law: &L, lo: f64, hi: f64) {
        let mut prev = -1.0;
        for k in 0..=200 {
            let t = lo + (hi - lo) * k as f64 / 200.0;
            let c = law.cdf(t);
            assert!(c >= prev, "cdf decreased at {t}");
            prev = c;
            // Skip points where the inverse is ill-conditioned (tiny density).
            if c > 1e-12 && c < 1.0 - 1e-12 && law.density(t) > 1e-6 {
                let back = law.quantile(c);
                assert!((back - t).abs() < 1e-9 * t.abs().max(1.0), "t={t} back={back}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        grid_round_trip(&Gaussian::new(1.0, 4.0).unwrap(), -8.0, 10.0);
        grid_round_trip(&Exponential::unit(), 0.0, 30.0);
        grid_round_trip(&Gamma::new(2.5, 1.5).unwrap(), 0.0, 30.0);
        grid_round_trip(&exp_order_stat_law(7).unwrap(), 0.0, 30.0);
    }

    #[test]
    fn exp_max_n1_is_unit_exponential() {
        let m = exp_order_stat_law(1).unwrap();
        for x in [0.0, 0.3, 1.0, 5.0] {
            assert!((m.density(x) - (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_max_cdf_at_ln2() {
        let m = exp_order_stat_law(2).unwrap();
        assert!((m.cdf(core::f64::consts::LN_2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exp_max_rejects_zero() {
        assert!(exp_order_stat_law(0).is_err());
    }

    #[test]
    fn exp_max_cdf_is_power_of_unit_cdf() {
        let one = exp_order_stat_law(1).unwrap();
        for n in [2u64, 3, 10, 50] {
            let m = exp_order_stat_law(n).unwrap();
            for k in 0..=100 {
                let x = k as f64 * 0.15;
                let expect = libm::pow(one.cdf(x), n as f64);
                assert!((m.cdf(x) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_max_mean_harmonic_and_quadrature() {
        let m = exp_order_stat_law(3).unwrap();
        assert!((m.mean() - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
        let q = Quadrature::default().with_rel_tol(1e-13);
        // E X = ∫_0^∞ (1 - F(x)) dx on x = -ln(1-u).
        let v = q
            .integrate(|u| (1.0 - m.cdf(-libm::log1p(-u))) / (1.0 - u), 0.0, 1.0)
            .unwrap()
            .value;
        assert!((v - 11.0 / 6.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn exp_max_mgf_matches_quadrature() {
        let m = exp_order_stat_law(4).unwrap();
        let lam = 0.4;
        let q = Quadrature::default().with_rel_tol(1e-13);
        let mgf = q
            .integrate(
                |u| {
                    let x = m.quantile(u);
                    (lam * (x - m.mean())).exp()
                },
                0.0,
                1.0,
            )
            .unwrap()
            .value;
        assert!((mgf.ln() - m.centered_log_mgf(lam)).abs() < 1e-9);
    }

    #[test]
    fn tvar_of_gaussian_and_mean() {
        let g = Gaussian::new(2.0, 1.0).unwrap();
        assert!((g.tvar(1.0).unwrap() - 2.0).abs() < 1e-8);
        // Lower tail mean of N(0,1) below the median: -φ(0)/0.5.
        let s = Gaussian::standard();
        let expect = -2.0 / (2.0 * core::f64::consts::PI).sqrt();
        assert!((s.tvar(0.5).unwrap() - expect).abs() < 1e-8);
        assert!(s.tvar(0.0).is_err());
    }
}
