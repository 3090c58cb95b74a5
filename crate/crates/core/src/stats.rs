//! Counting helpers shared by the reports.

use serde::{Deserialize, Serialize};

/// A percentage that carries its own numerator and denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
    /// `None` when the denominator is zero.
    pub percent: Option<f64>,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        assert!(
            numerator <= denominator,
            "ratio {numerator}/{denominator} exceeds one"
        );
        let percent = (denominator > 0).then(|| numerator as f64 * 100.0 / denominator as f64);
        Ratio {
            numerator,
            denominator,
            percent,
        }
    }

    pub fn from_usize(numerator: usize, denominator: usize) -> Self {
        Ratio::new(numerator as u64, denominator as u64)
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Ratio::new(0, 0)
    }
}

/// One support point of an empirical complementary CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub x: u64,
    /// Number of observations `>= x`.
    pub at_least: u64,
    pub total: u64,
    /// `at_least / total`.
    pub probability: f64,
}

/// `P(X >= x)` at every distinct observed value, ascending in `x`.
pub fn ccdf(values: &[u64]) -> Vec<CcdfPoint> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let total = sorted.len() as u64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let at_least = total - i as u64;
        points.push(CcdfPoint {
            x,
            at_least,
            total,
            probability: at_least as f64 / total as f64,
        });
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
    }
    points
}
