//! Scalar helpers shared by the classifiers.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`, clamped to `[0, 1]`.
pub fn normal_cdf(x: f64) -> f64 {
    (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).clamp(0.0, 1.0)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `ln(n!)` via the log-gamma function.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// Numerically stable `ln(sum(exp(v)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values
        .into_iter()
        .map(|v| (v - max).exp())
        .sum::<f64>()
        .ln()
}

/// Index of the largest score; ties go to the lowest index and NaN never wins.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() && !s.is_nan() {
            best = i;
        }
    }
    best
}

/// Index of the smallest score; ties go to the lowest index and NaN never wins.
pub fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] || scores[best].is_nan() && !s.is_nan() {
            best = i;
        }
    }
    best
}

/// Outcome of a classifier: the chosen class and the per-class statistic it
/// was chosen from.
///
/// For likelihood-style classifiers (`bayes`, `exact-bayes`, `ml`) the scores
/// are maximized; for distance classifiers (`kuiper`, `rck`, `vd`) they are
/// distances and the smallest wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub class: usize,
    pub scores: Vec<f64>,
}

impl Decision {
    pub(crate) fn maximizing(scores: Vec<f64>) -> Self {
        Decision {
            class: argmax(&scores),
            scores,
        }
    }

    pub(crate) fn minimizing(scores: Vec<f64>) -> Self {
        Decision {
            class: argmin(&scores),
            scores,
        }
    }
}
