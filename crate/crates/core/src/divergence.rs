//! f-divergences and Rényi divergences in nats.
//!
//! Conventions on finite alphabets: `0 · f(0/0) = 0`; a symbol with `q = 0 < p`
//! contributes `p · lim_{t→∞} f(t)/t`, which is `+∞` for KL and χ². Infinite
//! values are returned as `f64::INFINITY`, never `NaN`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::continuous::ContinuousLaw;
use crate::dist::{FiniteDist, RewardMap};
use crate::error::{Error, Result};
use crate::math::{abs, exp, expm1, ln, ln_1p, log_sum_exp, sqrt};
use crate::quadrature::Quadrature;

/// Distance from one below which Rényi divergences are replaced by KL.
pub const RENYI_KL_WINDOW: f64 = 1e-6;

type Generator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Kl,
    Chi2,
    Tv,
    Hellinger,
    ForwardKl,
    Custom {
        f: Generator,
        at_zero: f64,
        growth: f64,
    },
}

/// A convex generator `f` with `f(1) = 0`.
#[derive(Clone)]
pub struct FGenerator {
    name: String,
    shape: Shape,
}

impl fmt::Debug for FGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FGenerator").field("name", &self.name).finish()
    }
}

impl PartialEq for FGenerator {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl FGenerator {
    /// `x ln x`.
    pub fn kl() -> Self {
        Self::builtin("kl", Shape::Kl)
    }

    /// `(x - 1)^2`.
    pub fn chi2() -> Self {
        Self::builtin("chi2", Shape::Chi2)
    }

    /// `|x - 1| / 2`.
    pub fn tv() -> Self {
        Self::builtin("tv", Shape::Tv)
    }

    /// `(1 - √x)^2`.
    pub fn hellinger() -> Self {
        Self::builtin("hellinger", Shape::Hellinger)
    }

    /// `-ln x`, i.e. KL with the arguments swapped.
    pub fn forward_kl() -> Self {
        Self::builtin("forward_kl", Shape::ForwardKl)
    }

    fn builtin(name: &str, shape: Shape) -> Self {
        FGenerator {
            name: name.to_string(),
            shape,
        }
    }

    /// The five built-in generators in catalog order.
    pub fn catalog() -> [FGenerator; 5] {
        [
            Self::kl(),
            Self::chi2(),
            Self::tv(),
            Self::hellinger(),
            Self::forward_kl(),
        ]
    }

    /// Built-in generator by name; `fkl` is accepted for `forward_kl`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "kl" => Ok(Self::kl()),
            "chi2" => Ok(Self::chi2()),
            "tv" => Ok(Self::tv()),
            "hellinger" => Ok(Self::hellinger()),
            "forward_kl" | "fkl" => Ok(Self::forward_kl()),
            other => Err(Error::UnknownDivergence(other.to_string())),
        }
    }

    /// A user-supplied generator. `growth` is `lim_{t→∞} f(t)/t` (may be `+∞`).
    ///
    /// Rejects `f(1) != 0` and midpoint-convexity failures beyond `1e-9` on a
    /// log-spaced grid of `(0, ∞)`.
    pub fn custom<F>(name: &str, f: F, growth: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if f(1.0) != 0.0 {
            return Err(Error::param("f", format!("f(1) = {} is not 0", f(1.0))));
        }
        if growth.is_nan() {
            return Err(Error::param("growth", "must not be NaN"));
        }
        let grid: Vec<f64> = (-40..=40).map(|k| exp(k as f64 * 0.2)).collect();
        for (i, &a) in grid.iter().enumerate() {
            for &b in &grid[i + 1..] {
                let (fa, fb) = (f(a), f(b));
                let mid = f(0.5 * (a + b));
                if fa.is_finite() && fb.is_finite() && mid > 0.5 * (fa + fb) + 1e-9 * (1.0 + abs(mid)) {
                    return Err(Error::param(
                        "f",
                        format!("not convex between {a} and {b}"),
                    ));
                }
            }
        }
        // f(0) as the right limit; a convex f is monotone near 0.
        let at_zero = f(1e-300);
        Ok(FGenerator {
            name: name.to_string(),
            shape: Shape::Custom {
                f: Arc::new(f),
                at_zero,
                growth,
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `f(x)` for `x > 0`; `f(0)` is the right limit.
    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.at_zero();
        }
        if x == f64::INFINITY {
            return f64::INFINITY;
        }
        match &self.shape {
            Shape::Kl => x * ln(x),
            Shape::Chi2 => (x - 1.0) * (x - 1.0),
            Shape::Tv => 0.5 * abs(x - 1.0),
            Shape::Hellinger => {
                let s = 1.0 - sqrt(x);
                s * s
            }
            Shape::ForwardKl => -ln(x),
            Shape::Custom { f, .. } => f(x),
        }
    }

    /// `f(e^l)`, accurate where `e^l` under- or overflows.
    pub fn eval_log(&self, l: f64) -> f64 {
        match self.shape {
            Shape::Kl => {
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    l * exp(l)
                }
            }
            Shape::ForwardKl => -l,
            _ => self.eval(exp(l)),
        }
    }

    /// `lim_{x→0+} f(x)`.
    pub fn at_zero(&self) -> f64 {
        match &self.shape {
            Shape::Kl => 0.0,
            Shape::Chi2 => 1.0,
            Shape::Tv => 0.5,
            Shape::Hellinger => 1.0,
            Shape::ForwardKl => f64::INFINITY,
            Shape::Custom { at_zero, .. } => *at_zero,
        }
    }

    /// `lim_{t→∞} f(t)/t`, the cost of mass where the reference has none.
    pub fn growth(&self) -> f64 {
        match &self.shape {
            Shape::Kl | Shape::Chi2 => f64::INFINITY,
            Shape::Tv => 0.5,
            Shape::Hellinger => 1.0,
            Shape::ForwardKl => 0.0,
            Shape::Custom { growth, .. } => *growth,
        }
    }

    /// Contribution `q f(p/q)` of one symbol.
    fn term(&self, p: f64, q: f64) -> f64 {
        if q == 0.0 {
            if p == 0.0 {
                0.0
            } else {
                p * self.growth()
            }
        } else if p == 0.0 {
            q * self.at_zero()
        } else {
            match self.shape {
                Shape::Kl => p * (ln(p) - ln(q)),
                Shape::ForwardKl => q * (ln(q) - ln(p)),
                _ => q * self.eval(p / q),
            }
        }
    }
}

/// Which divergence a value measures.
#[derive(Debug, Clone, PartialEq)]
pub enum DivergenceKind {
    F(String),
    Renyi(f64),
}

impl DivergenceKind {
    /// Parses `kl|chi2|tv|hellinger|fkl|forward_kl`, or `renyi` with the given order.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        if name == "renyi" {
            let alpha = alpha.ok_or_else(|| Error::param("alpha", "required for renyi"))?;
            return Ok(DivergenceKind::Renyi(alpha));
        }
        FGenerator::by_name(name).map(|g| DivergenceKind::F(g.name().to_string()))
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::F(name) => f.write_str(name),
            DivergenceKind::Renyi(alpha) => write!(f, "renyi({alpha})"),
        }
    }
}

/// A divergence value in nats. `exact` is false for quadrature results.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub value: f64,
    pub exact: bool,
}

/// `Σ q f(p / q)`.
pub fn f_div(p: &FiniteDist, q: &FiniteDist, gen: &FGenerator) -> Result<DivergenceValue> {
    p.ensure_same_support(q)?;
    let value = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| gen.term(pi, qi))
        .sum::<f64>()
        // Nonnegative by Jensen; rounding can leave -1e-17.
        .max(0.0);
    Ok(DivergenceValue {
        kind: DivergenceKind::F(gen.name().to_string()),
        value,
        exact: true,
    })
}

/// `KL(p ‖ q)`.
pub fn kl(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    Ok(f_div(p, q, &FGenerator::kl())?.value)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param(
            "alpha",
            format!("{alpha} is outside (0, 1) ∪ (1, ∞)"),
        ));
    }
    Ok(())
}

/// `ln Σ p^α q^{1-α}` over raw probability slices.
fn renyi_log_sum(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let shift = alpha - 1.0;
    let mut orphan = 0.0;
    let mut log_ratios = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        match (pi > 0.0, qi > 0.0) {
            (true, true) => log_ratios.push((pi, ln(pi) - ln(qi))),
            (true, false) => {
                if alpha > 1.0 {
                    return f64::INFINITY;
                }
                orphan += pi;
            }
            _ => {}
        }
    }
    let spread = log_ratios.iter().map(|(_, l)| abs(*l)).fold(0.0, f64::max);
    if abs(shift) * spread <= 1.0 {
        // Σ p e^{(α-1)L} = 1 - orphan + Σ p expm1((α-1)L)
        let s: f64 = log_ratios.iter().map(|(w, l)| w * expm1(shift * l)).sum();
        ln_1p(s - orphan)
    } else {
        log_sum_exp(log_ratios.iter().map(|(w, l)| ln(*w) + shift * l))
    }
}

/// Rényi divergence `D_α(p ‖ q)`; within [`RENYI_KL_WINDOW`] of one this is KL.
pub fn renyi(p: &FiniteDist, q: &FiniteDist, alpha: f64) -> Result<DivergenceValue> {
    check_alpha(alpha)?;
    p.ensure_same_support(q)?;
    let value = if abs(alpha - 1.0) < RENYI_KL_WINDOW {
        kl(p, q)?
    } else {
        renyi_log_sum(p.probs(), q.probs(), alpha) / (alpha - 1.0)
    };
    Ok(DivergenceValue {
        kind: DivergenceKind::Renyi(alpha),
        value,
        exact: true,
    })
}

/// Orders used to extrapolate `D_α / α` to `α = 0`.
pub const LIMIT_ORDERS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Neville evaluation at zero of the polynomial through `(x_i, y_i)`.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut t: Vec<f64> = ys.to_vec();
    for level in 1..xs.len() {
        for i in 0..xs.len() - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            t[i] = (xj * t[i] - xi * t[i + 1]) / (xj - xi);
        }
    }
    t[0]
}

/// `lim_{α→0} D_α(p ‖ q) / α` by Richardson extrapolation over [`LIMIT_ORDERS`].
///
/// The limit is `KL(q ‖ p)`. When it is infinite the ratios diverge and this
/// reports [`Error::LimitUnstable`].
pub fn renyi_over_alpha_limit(p: &FiniteDist, q: &FiniteDist) -> Result<DivergenceValue> {
    p.ensure_same_support(q)?;
    let ratios: Vec<f64> = LIMIT_ORDERS
        .iter()
        .map(|&a| renyi_log_sum(p.probs(), q.probs(), a) / ((a - 1.0) * a))
        .collect();
    let full = extrapolate_to_zero(&LIMIT_ORDERS, &ratios);
    let coarse = extrapolate_to_zero(&LIMIT_ORDERS[1..], &ratios[1..]);
    let stable = full.is_finite()
        && coarse.is_finite()
        && abs(full - coarse) <= 1e-6 * (1.0 + abs(full))
        && abs(ratios[2] - full) <= 1e-2 * (1.0 + abs(full));
    if !stable {
        return Err(Error::LimitUnstable {
            first: coarse,
            second: full,
        });
    }
    Ok(DivergenceValue {
        kind: DivergenceKind::Renyi(0.0),
        value: full.max(0.0),
        exact: false,
    })
}

/// Best scalar witness in the variational lower bound on `D_α / α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBound {
    pub value: f64,
    pub lambda: f64,
}

fn dual_objective(p: &FiniteDist, q: &FiniteDist, h: &[f64], alpha: f64, lambda: f64) -> f64 {
    let log_mgf = |law: &FiniteDist, t: f64| {
        crate::math::log_weighted_sum_exp(
            law.probs(),
            &h.iter().map(|x| t * x).collect::<Vec<_>>(),
        )
    };
    log_mgf(p, (alpha - 1.0) * lambda) / (alpha - 1.0) - log_mgf(q, alpha * lambda) / alpha
}

/// Maximizes `(1/(α-1)) ln E_p e^{(α-1)λh} - (1/α) ln E_q e^{αλh}` over `λ`.
///
/// Any fixed witness gives a lower bound on `D_α(p ‖ q) / α`; the maximum is
/// attained exactly when `h` is an affine function of `ln(p/q)`.
pub fn renyi_dual_lower_bound(
    p: &FiniteDist,
    q: &FiniteDist,
    alpha: f64,
    witness: &RewardMap,
) -> Result<DualBound> {
    check_alpha(alpha)?;
    if abs(alpha - 1.0) < RENYI_KL_WINDOW {
        return Err(Error::param("alpha", "must differ from 1"));
    }
    p.ensure_same_support(q)?;
    witness.check(p)?;
    let h = witness.values();
    let (lo, hi) = h
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = hi - lo;
    let objective = |lambda: f64| dual_objective(p, q, h, alpha, lambda);
    let mut best = DualBound {
        value: objective(0.0),
        lambda: 0.0,
    };
    if spread == 0.0 {
        return Ok(best);
    }
    // λ · spread on a log grid over [1e-4, 1e3], both signs.
    let mut grid: Vec<f64> = alloc::vec![0.0];
    for k in 0..=280 {
        let scale = crate::math::powf(10.0, -4.0 + k as f64 / 40.0) / spread;
        grid.push(scale);
        grid.push(-scale);
    }
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid.iter().map(|&l| objective(l)).collect();
    let mut best_index = 0;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && (!best.value.is_finite() || *v > best.value) {
            best = DualBound {
                value: *v,
                lambda: grid[i],
            };
            best_index = i;
        }
    }
    let left = grid[best_index.saturating_sub(1)];
    let right = grid[(best_index + 1).min(grid.len() - 1)];
    let refined = golden_section_max(&objective, left, right, 200);
    let value = objective(refined);
    if value > best.value {
        best = DualBound {
            value,
            lambda: refined,
        };
    }
    Ok(best)
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let ratio = 0.5 * (sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if b - a <= 1e-15 * (abs(a) + abs(b)) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        c
    } else {
        d
    }
}

/// Largest `u < 1` used when a quadrature node rounds onto the endpoint.
const UNIT_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn substituted_log_ratio<P, Q>(p: &P, q: &Q, u: f64) -> f64
where
    P: ContinuousLaw + ?Sized,
    Q: ContinuousLaw + ?Sized,
{
    let u = u.clamp(f64::MIN_POSITIVE, UNIT_BELOW_ONE);
    let x = q.quantile(u);
    p.log_density(x) - q.log_density(x)
}

/// Points of `(0, 1)` where `log_ratio` changes sign, located on a 256-cell
/// grid and refined by bisection. Generators may have a kink at ratio one.
pub(crate) fn log_ratio_roots<F: Fn(f64) -> f64>(log_ratio: F) -> Vec<f64> {
    const CELLS: usize = 256;
    let mut roots = Vec::new();
    let mut left = 0.5 / CELLS as f64;
    let mut left_value = log_ratio(left);
    for k in 1..CELLS {
        let right = (k as f64 + 0.5) / CELLS as f64;
        let right_value = log_ratio(right);
        if (left_value < 0.0) != (right_value < 0.0) && left_value.is_finite() && right_value.is_finite() {
            let (mut a, mut b, fa_negative) = (left, right, left_value < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (log_ratio(mid) < 0.0) == fa_negative {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        left = right;
        left_value = right_value;
    }
    roots
}

/// `∫ q f(p/q) dx` computed as `∫_0^1 f(p/q (Q_q(u))) du`.
pub fn f_div_continuous<P, Q>(p: &P, q: &Q, gen: &FGenerator) -> Result<DivergenceValue>
where
    P: ContinuousLaw + ?Sized,
    Q: ContinuousLaw + ?Sized,
{
    let quad = Quadrature::default();
    let breaks = log_ratio_roots(|u| substituted_log_ratio(p, q, u));
    let integral = quad.integrate_with_breaks(
        |u| gen.eval_log(substituted_log_ratio(p, q, u)),
        0.0,
        1.0,
        &breaks,
    )?;
    Ok(DivergenceValue {
        kind: DivergenceKind::F(gen.name().to_string()),
        value: integral.value,
        exact: false,
    })
}

/// `D_α(p ‖ q)` for continuous laws, `(1/(α-1)) ln ∫_0^1 (p/q)^α du`.
pub fn renyi_continuous<P, Q>(p: &P, q: &Q, alpha: f64) -> Result<DivergenceValue>
where
    P: ContinuousLaw + ?Sized,
    Q: ContinuousLaw + ?Sized,
{
    check_alpha(alpha)?;
    let value = if abs(alpha - 1.0) < RENYI_KL_WINDOW {
        f_div_continuous(p, q, &FGenerator::kl())?.value
    } else {
        let quad = Quadrature::default().with_rel_tol(1e-12);
        let integral =
            quad.integrate(|u| exp(alpha * substituted_log_ratio(p, q, u)), 0.0, 1.0)?;
        ln(integral.value) / (alpha - 1.0)
    };
    Ok(DivergenceValue {
        kind: DivergenceKind::Renyi(alpha),
        value,
        exact: false,
    })
}
