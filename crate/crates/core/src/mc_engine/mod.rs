//! Monte Carlo simulation of the Lindley recursion
//! `W₀ = 0, W_{k+1} = max(0, W_k + X_k)` and of the sample mean
//! `W̄_n = (1/n) Σ_{i=1..n} W_i`.
//!
//! Replication `i` draws its increments from ChaCha8 stream `i` under the
//! run seed, and partial results are merged in replication order, so
//! outcomes do not depend on the number of worker threads.

mod exhaustive;
mod extreme;
mod tails;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::increments::{IncrementModel, IncrementSampler, ModelError};

pub use exhaustive::{enumerate_bernoulli, ExhaustiveOutcome};
pub use extreme::{compare_extreme_to_theory, ExtremeComparison};
pub use tails::{pilot_mean, tail_asymmetry_report, tail_cells, wilson_interval, PilotEstimate, Side, TailCell};

/// Replications per work unit. Fixed so the merge tree never depends on
/// the worker count.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: IncrementModel,
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub keep_extreme: bool,
    /// Keep the sample means of the first this-many replications.
    pub reservoir: usize,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn new(model: IncrementModel, n: usize, replications: u64, seed: u64) -> Self {
        SimConfig {
            model,
            n,
            replications,
            seed,
            thresholds: Vec::new(),
            keep_extreme: false,
            reservoir: 0,
            workers: None,
        }
    }
}

/// Counts of `{W̄_n ≤ r}` and `{W̄_n ≥ r}` for one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCount {
    pub r: f64,
    pub below: u64,
    pub above: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub tail_counts: Vec<TailCount>,
    pub extreme_mean: f64,
    /// Lowest replication index attaining `extreme_mean`.
    pub extreme_index: u64,
    /// `W_0..=W_n` of the extreme replication.
    pub extreme_path: Option<Vec<f64>>,
    pub wbar_samples: Option<Vec<f64>>,
    /// Average of `W̄_n` over all replications.
    pub mean_wbar: f64,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("horizon n and replication count must be at least 1")]
    EmptyRun,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Stream `index` of the run seeded by `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Lindley trajectory `W_0..=W_n` and its sample mean.
pub fn simulate_lindley<R: rand::RngCore>(sampler: &IncrementSampler, n: usize, rng: &mut R) -> (Vec<f64>, f64) {
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut cur: f64 = 0.0;
    let mut sum = 0.0;
    for _ in 0..n {
        cur = (cur + sampler.draw(rng)).max(0.0);
        sum += cur;
        w.push(cur);
    }
    (w, sum / n as f64)
}

/// The recursion applied to given increments.
pub fn lindley_from_increments(increments: &[f64]) -> (Vec<f64>, f64) {
    let mut w = Vec::with_capacity(increments.len() + 1);
    w.push(0.0);
    let mut cur: f64 = 0.0;
    let mut sum = 0.0;
    for &x in increments {
        cur = (cur + x).max(0.0);
        sum += cur;
        w.push(cur);
    }
    let wbar = if increments.is_empty() { 0.0 } else { sum / increments.len() as f64 };
    (w, wbar)
}

#[inline]
fn sample_mean<R: rand::RngCore>(sampler: &IncrementSampler, n: usize, rng: &mut R) -> f64 {
    let mut cur: f64 = 0.0;
    let mut sum = 0.0;
    for _ in 0..n {
        cur = (cur + sampler.draw(rng)).max(0.0);
        sum += cur;
    }
    sum / n as f64
}

#[derive(Debug, Clone)]
struct Partial {
    below: Vec<u64>,
    above: Vec<u64>,
    best: f64,
    best_index: u64,
    sum: f64,
    kept: Vec<f64>,
}

fn run_chunk(cfg: &SimConfig, sampler: &IncrementSampler, start: u64, end: u64) -> Partial {
    let k = cfg.thresholds.len();
    let mut p = Partial {
        below: vec![0; k],
        above: vec![0; k],
        best: f64::NEG_INFINITY,
        best_index: start,
        sum: 0.0,
        kept: Vec::new(),
    };
    for i in start..end {
        let mut rng = replication_rng(cfg.seed, i);
        let wbar = sample_mean(sampler, cfg.n, &mut rng);
        for (t, &r) in cfg.thresholds.iter().enumerate() {
            p.below[t] += (wbar <= r) as u64;
            p.above[t] += (wbar >= r) as u64;
        }
        if wbar > p.best {
            p.best = wbar;
            p.best_index = i;
        }
        p.sum += wbar;
        if (i as usize) < cfg.reservoir {
            p.kept.push(wbar);
        }
    }
    p
}

/// Runs `replications` independent horizons of length `n`.
pub fn run(cfg: &SimConfig) -> Result<SimOutcome, SimError> {
    if cfg.n == 0 || cfg.replications == 0 {
        return Err(SimError::EmptyRun);
    }
    let sampler = cfg.model.sampler()?;
    let chunks: Vec<(u64, u64)> = (0..cfg.replications.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(cfg.replications)))
        .collect();
    let work = || -> Vec<Partial> {
        chunks.par_iter().map(|&(a, b)| run_chunk(cfg, &sampler, a, b)).collect()
    };
    let partials = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let k = cfg.thresholds.len();
    let (mut below, mut above) = (vec![0u64; k], vec![0u64; k]);
    let (mut best, mut best_index, mut sum) = (f64::NEG_INFINITY, 0u64, 0.0);
    let mut kept = Vec::new();
    for p in partials {
        for t in 0..k {
            below[t] += p.below[t];
            above[t] += p.above[t];
        }
        // strict comparison keeps the lowest index among ties
        if p.best > best {
            best = p.best;
            best_index = p.best_index;
        }
        sum += p.sum;
        kept.extend(p.kept);
    }
    let extreme_path = cfg.keep_extreme.then(|| {
        let mut rng = replication_rng(cfg.seed, best_index);
        simulate_lindley(&sampler, cfg.n, &mut rng).0
    });
    let tail_counts = cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(t, &r)| TailCount { r, below: below[t], above: above[t] })
        .collect();
    Ok(SimOutcome {
        n: cfg.n,
        replications: cfg.replications,
        seed: cfg.seed,
        tail_counts,
        extreme_mean: best,
        extreme_index: best_index,
        extreme_path,
        wbar_samples: (cfg.reservoir > 0).then_some(kept),
        mean_wbar: sum / cfg.replications as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unrolled_recursion() {
        let (w, wbar) = lindley_from_increments(&[1.0, 1.0, -1.0]);
        assert_eq!(w, vec![0.0, 1.0, 2.0, 1.0]);
        assert!((wbar - 4.0 / 3.0).abs() < 1e-15);
        let (w, wbar) = lindley_from_increments(&[-0.5, -2.0, -0.1]);
        assert!(w.iter().all(|&x| x == 0.0));
        assert_eq!(wbar, 0.0);
    }

    #[test]
    fn single_replication() {
        let model = IncrementModel::gaussian(0.5, 1.0).unwrap();
        let mut cfg = SimConfig::new(model, 20, 1, 9);
        cfg.thresholds = vec![0.0, 0.5, 1e9];
        cfg.keep_extreme = true;
        let out = run(&cfg).unwrap();
        for t in &out.tail_counts {
            assert!(t.below <= 1 && t.above <= 1);
        }
        assert_eq!(out.mean_wbar, out.extreme_mean);
        let path = out.extreme_path.unwrap();
        let mean = path[1..].iter().sum::<f64>() / 20.0;
        assert_eq!(mean, out.extreme_mean);
    }

    #[test]
    fn reflection_holds_on_extreme_path() {
        let model = IncrementModel::poisson_batch(0.5, 1.0).unwrap();
        let mut cfg = SimConfig::new(model, 30, 500, 3);
        cfg.keep_extreme = true;
        let out = run(&cfg).unwrap();
        let w = out.extreme_path.unwrap();
        assert_eq!(w.len(), 31);
        assert_eq!(w[0], 0.0);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn empty_runs_rejected() {
        let model = IncrementModel::gaussian(0.5, 1.0).unwrap();
        assert_eq!(run(&SimConfig::new(model, 0, 5, 1)), Err(SimError::EmptyRun));
    }
}
