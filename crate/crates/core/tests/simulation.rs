use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use rrw_core::mc_engine::{
    enumerate_bernoulli, lindley_from_increments, pilot_mean, replication_rng, run, simulate_lindley, tail_cells,
    wilson_interval, SimConfig,
};
use rrw_core::IncrementModel;

/// Exact `P{W̄_n <= r}` and `P{W̄_n >= r}` for the ±1 walk, from all 2^n
/// sequences, with `r = r_num / r_den`.
fn exact_tails(n: usize, alpha: &BigRational, r_num: i64, r_den: i64) -> (BigRational, BigRational, Vec<u64>, Vec<u64>) {
    let one = BigRational::from_integer(1.into());
    let mut below = BigRational::zero();
    let mut above = BigRational::zero();
    let (mut below_k, mut above_k) = (vec![0u64; n + 1], vec![0u64; n + 1]);
    for mask in 0u32..(1 << n) {
        let (mut w, mut total, mut ups) = (0i64, 0i64, 0usize);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                w += 1;
                ups += 1;
            } else {
                w = (w - 1).max(0);
            }
            total += w;
        }
        let mut weight = one.clone();
        for _ in 0..ups {
            weight *= alpha;
        }
        for _ in ups..n {
            weight *= &one - alpha;
        }
        // total/n <= r_num/r_den, compared in integers
        let lhs = total * r_den;
        let rhs = r_num * n as i64;
        if lhs <= rhs {
            below += &weight;
            below_k[ups] += 1;
        }
        if lhs >= rhs {
            above += &weight;
            above_k[ups] += 1;
        }
    }
    (below, above, below_k, above_k)
}

#[test]
fn exhaustive_enumeration_matches_rational_oracle() {
    let n = 10;
    let alpha = BigRational::new(BigInt::from(3), BigInt::from(10));
    let m = IncrementModel::bernoulli(0.3).unwrap();
    let thresholds = [(0, 1), (1, 2), (1, 1), (3, 2), (5, 2)];
    let rs: Vec<f64> = thresholds.iter().map(|&(a, b)| a as f64 / b as f64).collect();
    let out = enumerate_bernoulli(&m, n, &rs).unwrap();
    for (t, &(num, den)) in thresholds.iter().enumerate() {
        let (pb, pa, bk, ak) = exact_tails(n, &alpha, num, den);
        assert_eq!(out.below[t], bk, "counts below r={num}/{den}");
        assert_eq!(out.above[t], ak, "counts above r={num}/{den}");
        let (pb, pa) = (pb.to_f64().unwrap(), pa.to_f64().unwrap());
        assert!((out.prob_below(t) - pb).abs() <= 4.0 * f64::EPSILON * pb);
        assert!((out.prob_above(t) - pa).abs() <= 4.0 * f64::EPSILON * pa.max(f64::MIN_POSITIVE));
    }
    let total: f64 = (0..=n * (n + 1) / 2).map(|s| out.prob_sum(s)).sum();
    assert!((total - 1.0).abs() < 1e-14);
}

#[test]
fn exhaustive_mode_rejects_other_families() {
    assert!(enumerate_bernoulli(&IncrementModel::gaussian(1.0, 1.0).unwrap(), 4, &[0.5]).is_none());
    assert!(enumerate_bernoulli(&IncrementModel::bernoulli(0.3).unwrap(), 25, &[0.5]).is_none());
}

#[test]
fn two_step_walk_distribution() {
    let a = 0.3f64;
    let out = enumerate_bernoulli(&IncrementModel::bernoulli(a).unwrap(), 2, &[]).unwrap();
    // sums of W_1 + W_2: 0, 1, 3
    assert!((out.prob_sum(0) - (1.0 - a).powi(2)).abs() < 1e-15);
    assert!((out.prob_sum(1) - 2.0 * a * (1.0 - a)).abs() < 1e-15);
    assert!((out.prob_sum(3) - a * a).abs() < 1e-15);
    assert_eq!(out.prob_sum(2), 0.0);
}

proptest! {
    #[test]
    fn lindley_is_the_reflected_partial_sum(xs in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let (w, wbar) = lindley_from_increments(&xs);
        prop_assert_eq!(w.len(), xs.len() + 1);
        prop_assert_eq!(w[0], 0.0);
        // W_k = S_k - min_{j<=k} S_j
        let (mut s, mut lo, mut total) = (0.0f64, 0.0f64, 0.0);
        for (k, &x) in xs.iter().enumerate() {
            s += x;
            lo = lo.min(s);
            prop_assert!((w[k + 1] - (s - lo)).abs() < 1e-9);
            prop_assert!(w[k + 1] >= 0.0);
            prop_assert!(w[k + 1] - w[k] >= x - 1e-12);
            if w[k] + x >= 0.0 {
                prop_assert!((w[k + 1] - w[k] - x).abs() < 1e-12);
            }
            total += w[k + 1];
        }
        prop_assert!((wbar - total / xs.len() as f64).abs() < 1e-9);
    }
}

#[test]
fn replay_of_a_stream_reproduces_its_path() {
    let m = IncrementModel::poisson_batch(0.5, 1.0).unwrap();
    let mut cfg = SimConfig::new(m.clone(), 30, 5000, 99);
    cfg.keep_extreme = true;
    let out = run(&cfg).unwrap();
    let (w, wbar) = simulate_lindley(&m.sampler().unwrap(), 30, &mut replication_rng(99, out.extreme_index));
    assert_eq!(out.extreme_path.as_deref(), Some(w.as_slice()));
    assert_eq!(wbar, out.extreme_mean);
    assert!(w.iter().all(|&x| x >= 0.0));
}

#[test]
fn outcomes_do_not_depend_on_worker_count() {
    let m = IncrementModel::gaussian(0.5, 1.0).unwrap();
    let mut cfg = SimConfig::new(m, 40, 30_000, 2024);
    cfg.thresholds = vec![0.05, 0.6, 2.0];
    cfg.keep_extreme = true;
    cfg.reservoir = 100;
    let runs: Vec<_> = [1, 2, 5, 8]
        .into_iter()
        .map(|w| {
            cfg.workers = Some(w);
            run(&cfg).unwrap()
        })
        .collect();
    for r in &runs[1..] {
        assert_eq!(r, &runs[0]);
        assert_eq!(r.mean_wbar.to_bits(), runs[0].mean_wbar.to_bits());
    }
    let c = &runs[0].tail_counts;
    assert!(c.iter().all(|t| t.below + t.above >= 30_000 && t.below <= 30_000 && t.above <= 30_000));
}

#[test]
fn gaussian_draws_have_the_stated_mean() {
    let m = IncrementModel::gaussian(0.5, 1.0).unwrap();
    let mut rng = replication_rng(7, 0);
    let n = 1_000_000;
    let mean = (0..n).map(|_| m.sample(&mut rng).unwrap()).sum::<f64>() / n as f64;
    assert!((mean + 0.5).abs() < 0.005);
}

#[test]
fn bernoulli_pilot_mean_matches_stationary_mean() {
    for alpha in [0.2, 0.3] {
        let m = IncrementModel::bernoulli(alpha).unwrap();
        let est = pilot_mean(&m, 2_000_000, 11).unwrap();
        let known = alpha / (1.0 - 2.0 * alpha);
        assert!((est.mean - known).abs() <= 3.0 * est.std_error, "{} vs {known} (se {})", est.mean, est.std_error);
    }
}

#[test]
fn wilson_interval_frozen_values() {
    let (lo, hi) = wilson_interval(5, 100, 1.959_963_984_540_054);
    assert!((lo - 0.021_543_679_154_367_96).abs() < 1e-15);
    assert!((hi - 0.111_750_469_231_919_13).abs() < 1e-15);
    let (lo, hi) = wilson_interval(0, 1000, 1.959_963_984_540_054);
    assert!(lo.abs() < 1e-15);
    assert!((hi - 0.003_826_758_485_555_123).abs() < 1e-15);
}

#[test]
fn zero_counts_are_censored_at_one_over_r() {
    let m = IncrementModel::gaussian(0.5, 1.0).unwrap();
    let mut cfg = SimConfig::new(m, 20, 1000, 1);
    cfg.thresholds = vec![50.0];
    let cells = tail_cells(&run(&cfg).unwrap());
    let upper = cells.iter().find(|c| c.side.as_str() == "upper").unwrap();
    assert_eq!(upper.count, 0);
    assert!(upper.censored);
    assert!((upper.log_freq_over_n - (1.0f64 / 1000.0).ln() / 20.0).abs() < 1e-15);
    assert!(upper.log_freq_over_n.is_finite());
}
