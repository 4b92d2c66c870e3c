//! A named bound next to the quantity it dominates.

use alloc::string::{String, ToString};

/// Slack below which a report counts as a violation.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    /// Best-of-n sample count, or `0` when the bound has none.
    pub n: u64,
    pub bound_value: f64,
    pub achieved_value: f64,
    /// `bound_value - achieved_value`.
    pub slack: f64,
}

impl BoundReport {
    pub fn new(name: impl ToString, n: u64, bound_value: f64, achieved_value: f64) -> Self {
        BoundReport {
            name: name.to_string(),
            n,
            bound_value,
            achieved_value,
            slack: bound_value - achieved_value,
        }
    }

    /// `slack >= -1e-9`; an infinite bound always holds.
    pub fn holds(&self) -> bool {
        self.bound_value == f64::INFINITY || self.slack >= -SLACK_TOLERANCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_and_holds() {
        let r = BoundReport::new("kl", 2, 0.193147, 0.161724);
        assert!((r.slack - 0.031423).abs() < 1e-12);
        assert!(r.holds());
        assert!(!BoundReport::new("x", 0, 1.0, 1.1).holds());
        assert!(BoundReport::new("x", 0, f64::INFINITY, f64::INFINITY).holds());
    }
}
