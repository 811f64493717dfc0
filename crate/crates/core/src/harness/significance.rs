//! Paired comparison of two classifiers evaluated on the same trials.

use crate::math::ln_factorial;

/// Discordant-pair counts of two paired classifiers and the one-sided exact
/// binomial (sign test / McNemar) p-value for "A is more accurate than B".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComparison {
    /// Trials A got right and B got wrong.
    pub a_only: u64,
    /// Trials B got right and A got wrong.
    pub b_only: u64,
    pub p_value: f64,
}

impl PairedComparison {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// # Panics
///
/// If the two outcome vectors differ in length.
pub fn paired_sign_test(a: &[bool], b: &[bool]) -> PairedComparison {
    assert_eq!(a.len(), b.len(), "paired outcomes must align");
    let (mut a_only, mut b_only) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        match (x, y) {
            (true, false) => a_only += 1,
            (false, true) => b_only += 1,
            _ => {}
        }
    }
    PairedComparison {
        a_only,
        b_only,
        p_value: binomial_upper_tail(a_only + b_only, a_only),
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let ln_half_n = n as f64 * 0.5f64.ln();
    let tail: f64 = (k..=n)
        .map(|i| (ln_factorial(n) - ln_factorial(i) - ln_factorial(n - i) + ln_half_n).exp())
        .sum();
    tail.min(1.0)
}
