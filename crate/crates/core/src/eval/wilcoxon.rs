//! One-tailed Wilcoxon signed-rank test on paired scores.
//!
//! Differences are `b - a`; zero differences are dropped and tied absolute
//! differences receive average ranks. With at most [`EXACT_MAX_N`] non-zero
//! pairs the p-value comes from the exact null distribution (enumerated by a
//! subset-sum count over doubled ranks, so half-ranks stay integral).
//! Larger samples use the normal approximation with tie-corrected variance
//! and a 0.5 continuity correction.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const EXACT_MAX_N: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    /// `b` tends to exceed `a`; statistic is W-.
    Greater,
    /// `b` tends to fall below `a`; statistic is W+.
    Less,
}

impl Alternative {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "greater" => Some(Alternative::Greater),
            "less" => Some(Alternative::Less),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEnumeration,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub w_statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub n_input: usize,
    pub n_effective: usize,
    pub p_value: f64,
    pub method: Method,
    pub alternative: Alternative,
}

impl WilcoxonResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum WilcoxonError {
    #[error("no paired observations")]
    Empty,
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("paired scores must be finite")]
    NonFinite,
}

/// Average 1-based ranks of `values` (ties share the mean of their ranks).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)], alternative: Alternative) -> Result<WilcoxonResult, WilcoxonError> {
    if pairs.is_empty() {
        return Err(WilcoxonError::Empty);
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(WilcoxonError::NonFinite);
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| b - a).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(WilcoxonError::AllZeroDifferences);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let (mut w_plus, mut w_minus) = (0.0, 0.0);
    for (d, r) in diffs.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let w_statistic = match alternative {
        Alternative::Greater => w_minus,
        Alternative::Less => w_plus,
    };
    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_lower_tail(&ranks, w_statistic), Method::ExactEnumeration)
    } else {
        (normal_lower_tail(&ranks, w_statistic), Method::NormalApproximation)
    };
    Ok(WilcoxonResult {
        w_statistic,
        w_plus,
        w_minus,
        n_input: pairs.len(),
        n_effective: n,
        p_value,
        method,
        alternative,
    })
}

/// `P(T <= w)` where `T` is the sum of a uniformly random subset of `ranks`.
pub fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    // ranks are multiples of 0.5, so doubling makes them integers
    let doubled: Vec<usize> = ranks.iter().map(|r| libm::round(r * 2.0) as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let threshold = libm::round(w * 2.0) as usize;
    let hits: u64 = counts[..=threshold.min(total)].iter().sum();
    hits as f64 / libm::ldexp(1.0, ranks.len() as i32)
}

/// Normal approximation of `P(T <= w)` with tie correction and a 0.5
/// continuity correction.
pub fn normal_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w + 0.5 - mean) / libm::sqrt(var);
    let p = 0.5 * libm::erfc(-z / core::f64::consts::SQRT_2);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}
