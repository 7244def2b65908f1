//! Exact tail counts for `±1` increments by enumerating all `2ⁿ` sign
//! sequences.

use serde::Serialize;

use crate::increments::{Family, IncrementModel, ModelSpec};

/// Largest horizon accepted by [`enumerate_bernoulli`].
pub const MAX_EXHAUSTIVE_N: usize = 24;

/// For every number of up-steps `k`, the number of sequences with `k` ups
/// whose sample mean satisfies each tail event. The probability of an event
/// is `Σ_k count_k α^k (1-α)^{n-k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveOutcome {
    pub n: usize,
    pub alpha: f64,
    pub thresholds: Vec<f64>,
    /// `below[t][k]`: sequences with `k` ups and `W̄_n ≤ thresholds[t]`.
    pub below: Vec<Vec<u64>>,
    /// `above[t][k]`: sequences with `k` ups and `W̄_n ≥ thresholds[t]`.
    pub above: Vec<Vec<u64>>,
    /// `by_sum[k][s]`: sequences with `k` ups and `Σ W_i = s`.
    pub by_sum: Vec<Vec<u64>>,
}

impl ExhaustiveOutcome {
    fn weight(&self, k: usize) -> f64 {
        self.alpha.powi(k as i32) * (1.0 - self.alpha).powi((self.n - k) as i32)
    }

    pub fn prob_below(&self, t: usize) -> f64 {
        self.below[t].iter().enumerate().map(|(k, &c)| c as f64 * self.weight(k)).sum()
    }

    pub fn prob_above(&self, t: usize) -> f64 {
        self.above[t].iter().enumerate().map(|(k, &c)| c as f64 * self.weight(k)).sum()
    }

    /// `P{W̄_n = s/n}`.
    pub fn prob_sum(&self, s: usize) -> f64 {
        (0..=self.n)
            .map(|k| self.by_sum[k].get(s).copied().unwrap_or(0) as f64 * self.weight(k))
            .sum()
    }
}

/// `None` unless `model` is the `±1` family and `1 ≤ n ≤ MAX_EXHAUSTIVE_N`.
pub fn enumerate_bernoulli(model: &IncrementModel, n: usize, thresholds: &[f64]) -> Option<ExhaustiveOutcome> {
    if model.family() != Family::Bernoulli || n == 0 || n > MAX_EXHAUSTIVE_N {
        return None;
    }
    let Ok(ModelSpec::Bernoulli { alpha }) = model.spec() else {
        return None;
    };
    let max_sum = n * (n + 1) / 2;
    let mut by_sum = vec![vec![0u64; max_sum + 1]; n + 1];
    for mask in 0u64..(1u64 << n) {
        let (mut w, mut s) = (0i64, 0usize);
        for i in 0..n {
            w = if mask >> i & 1 == 1 { w + 1 } else { (w - 1).max(0) };
            s += w as usize;
        }
        by_sum[mask.count_ones() as usize][s] += 1;
    }
    let mut below = Vec::with_capacity(thresholds.len());
    let mut above = Vec::with_capacity(thresholds.len());
    for &r in thresholds {
        let (mut b, mut a) = (vec![0u64; n + 1], vec![0u64; n + 1]);
        for k in 0..=n {
            for (s, &c) in by_sum[k].iter().enumerate() {
                // same arithmetic as the simulated sample mean
                let wbar = s as f64 / n as f64;
                if wbar <= r {
                    b[k] += c;
                }
                if wbar >= r {
                    a[k] += c;
                }
            }
        }
        below.push(b);
        above.push(a);
    }
    Some(ExhaustiveOutcome { n, alpha, thresholds: thresholds.to_vec(), below, above, by_sum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_distribution() {
        let alpha = 0.3;
        let m = IncrementModel::bernoulli(alpha).unwrap();
        let e = enumerate_bernoulli(&m, 2, &[]).unwrap();
        // ++ → W = (1, 2); +- → (1, 0); -+ → (0, 1); -- → (0, 0)
        assert!((e.prob_sum(3) - alpha * alpha).abs() < 1e-15);
        assert!((e.prob_sum(1) - 2.0 * alpha * (1.0 - alpha)).abs() < 1e-15);
        assert!((e.prob_sum(0) - (1.0 - alpha).powi(2)).abs() < 1e-15);
        assert_eq!(e.prob_sum(2), 0.0);
    }

    #[test]
    fn rejects_other_families() {
        let g = IncrementModel::gaussian(1.0, 1.0).unwrap();
        assert!(enumerate_bernoulli(&g, 4, &[]).is_none());
        let b = IncrementModel::bernoulli(0.3).unwrap();
        assert!(enumerate_bernoulli(&b, 25, &[]).is_none());
    }
}
