//! Tail-probability estimates of the sample mean and a steady-state pilot.

use serde::Serialize;

use crate::increments::IncrementModel;

use super::{replication_rng, run, SimConfig, SimError, SimOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `{W̄_n ≤ r}`
    Lower,
    /// `{W̄_n ≥ r}`
    Upper,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

/// One row of the tail report. For zero counts `log_freq_over_n` is the
/// censoring bound `log(1/R)/n` and `censored` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCell {
    pub n: usize,
    pub r: f64,
    pub side: Side,
    pub count: u64,
    pub replications: u64,
    pub log_freq_over_n: f64,
    pub lo: f64,
    pub hi: f64,
    pub censored: bool,
}

/// Two-sided Wilson score interval for `count` successes in `total` trials.
pub fn wilson_interval(count: u64, total: u64, z: f64) -> (f64, f64) {
    let n = total as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

const WILSON_Z: f64 = 1.959_963_984_540_054;

fn cell(n: usize, r: f64, side: Side, count: u64, reps: u64) -> TailCell {
    let (lo, hi) = wilson_interval(count, reps, WILSON_Z);
    let nf = n as f64;
    let censored = count == 0;
    let point = if censored { (1.0 / reps as f64).ln() } else { (count as f64 / reps as f64).ln() };
    TailCell {
        n,
        r,
        side,
        count,
        replications: reps,
        log_freq_over_n: point / nf,
        lo: lo.ln() / nf,
        hi: hi.ln() / nf,
        censored,
    }
}

/// Lower and upper tail cells for every threshold of one run.
pub fn tail_cells(outcome: &SimOutcome) -> Vec<TailCell> {
    let mut cells = Vec::with_capacity(2 * outcome.tail_counts.len());
    for t in &outcome.tail_counts {
        cells.push(cell(outcome.n, t.r, Side::Lower, t.below, outcome.replications));
        cells.push(cell(outcome.n, t.r, Side::Upper, t.above, outcome.replications));
    }
    cells
}

/// `(1/n)·log P̂{W̄_n ≤ r_low}` and `(1/n)·log P̂{W̄_n ≥ r_high}` for each
/// horizon in `n_list`.
pub fn tail_asymmetry_report(
    model: &IncrementModel,
    r_low: f64,
    r_high: f64,
    n_list: &[usize],
    replications: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<TailCell>, SimError> {
    let mut cells = Vec::with_capacity(2 * n_list.len());
    for &n in n_list {
        let mut cfg = SimConfig::new(model.clone(), n, replications, seed);
        cfg.thresholds = vec![r_low, r_high];
        cfg.workers = workers;
        let out = run(&cfg)?;
        cells.push(cell(n, r_low, Side::Lower, out.tail_counts[0].below, replications));
        cells.push(cell(n, r_high, Side::Upper, out.tail_counts[1].above, replications));
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PilotEstimate {
    pub mean: f64,
    /// Batch-means standard error.
    pub std_error: f64,
    pub steps: usize,
}

const PILOT_BATCHES: usize = 100;

/// Long-run time average of `W_k` after discarding a tenth as burn-in.
pub fn pilot_mean(model: &IncrementModel, steps: usize, seed: u64) -> Result<PilotEstimate, SimError> {
    let sampler = model.sampler()?;
    let burn = steps / 10;
    let batch = ((steps - burn) / PILOT_BATCHES).max(1);
    let mut rng = replication_rng(seed, u64::MAX);
    let mut w: f64 = 0.0;
    for _ in 0..burn {
        w = (w + sampler.draw(&mut rng)).max(0.0);
    }
    let mut means = Vec::with_capacity(PILOT_BATCHES);
    for _ in 0..PILOT_BATCHES {
        let mut s = 0.0;
        for _ in 0..batch {
            w = (w + sampler.draw(&mut rng)).max(0.0);
            s += w;
        }
        means.push(s / batch as f64);
    }
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(PilotEstimate { mean, std_error: (var / b).sqrt(), steps: burn + batch * PILOT_BATCHES })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%
        let (lo, hi) = wilson_interval(10, 100, WILSON_Z);
        assert!((lo - 0.055_229).abs() < 1e-5 && (hi - 0.174_366).abs() < 1e-5);
        let (lo, hi) = wilson_interval(0, 50, WILSON_Z);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn zero_counts_are_censored() {
        let m = IncrementModel::gaussian(0.5, 1.0).unwrap();
        let cells = tail_asymmetry_report(&m, -1.0, 1e6, &[5], 10, 1, None).unwrap();
        for c in cells {
            assert!(c.censored);
            assert_eq!(c.count, 0);
            assert!((c.log_freq_over_n - (0.1f64).ln() / 5.0).abs() < 1e-15);
        }
    }
}
