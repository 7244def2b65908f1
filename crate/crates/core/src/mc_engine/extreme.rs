//! Comparison of the most extreme simulated path with the theoretical
//! optimizer at the observed area.

use serde::Serialize;

use crate::config::SolverConfig;
use crate::increments::IncrementModel;
use crate::mlp_solver::{eval_path, solve_path_with, Branch, MostLikelyPath, SolveError};
use crate::numerics::golden_section_min;

use super::SimOutcome;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeComparison {
    /// `extreme_mean / n`, the area of the scaled path.
    pub z_obs: f64,
    pub sup_distance: f64,
    /// Mean absolute deviation over the lattice points.
    pub l1_distance: f64,
    pub max_psi: f64,
    /// Start of the theoretical excursion after alignment.
    pub shift: f64,
    /// The optimizer was a translation family and was aligned by minimal
    /// sup-distance over its feasible starts.
    pub aligned: bool,
    pub path: MostLikelyPath,
}

fn shifted(path: &MostLikelyPath, model: &IncrementModel, shift: f64, t: f64) -> f64 {
    eval_path(path, model, t - shift)
}

fn distances(path: &MostLikelyPath, model: &IncrementModel, scaled: &[(f64, f64)], shift: f64) -> (f64, f64) {
    let (mut sup, mut l1) = (0.0f64, 0.0);
    for &(t, y) in scaled {
        let d = (y - shifted(path, model, shift, t)).abs();
        sup = sup.max(d);
        l1 += d;
    }
    (sup, l1 / scaled.len() as f64)
}

const ALIGN_GRID: usize = 400;

/// Scales the extreme path as `k/n ↦ W_k/n` and measures its distance to
/// the optimizer with area `extreme_mean / n`.
pub fn compare_extreme_to_theory(
    outcome: &SimOutcome,
    model: &IncrementModel,
    config: &SolverConfig,
) -> Result<Option<ExtremeComparison>, SolveError> {
    let Some(w) = &outcome.extreme_path else {
        return Ok(None);
    };
    let n = outcome.n as f64;
    let z_obs = outcome.extreme_mean.max(0.0) / n;
    let path = solve_path_with(model, z_obs, config)?;
    let scaled: Vec<(f64, f64)> = w.iter().enumerate().map(|(k, &x)| (k as f64 / n, x / n)).collect();
    let max_psi = (0..=1000).map(|i| eval_path(&path, model, i as f64 / 1000.0)).fold(0.0, f64::max);
    let [_, window] = path.start_window;
    let (shift, aligned) = if path.branch == Branch::Interior && window > 0.0 {
        let sup_at = |s: f64| distances(&path, model, &scaled, s).0;
        let mut best = (0.0, sup_at(0.0));
        for i in 1..=ALIGN_GRID {
            let s = window * i as f64 / ALIGN_GRID as f64;
            let d = sup_at(s);
            if d < best.1 {
                best = (s, d);
            }
        }
        let step = window / ALIGN_GRID as f64;
        let refined = golden_section_min(sup_at, (best.0 - step).max(0.0), (best.0 + step).min(window), 1e-9);
        (if refined.value < best.1 { refined.x } else { best.0 }, true)
    } else {
        (0.0, false)
    };
    let (sup_distance, l1_distance) = distances(&path, model, &scaled, shift);
    Ok(Some(ExtremeComparison { z_obs, sup_distance, l1_distance, max_psi, shift, aligned, path }))
}

#[cfg(test)]
mod tests {
    use super::super::{run, SimConfig};
    use super::*;

    #[test]
    fn zero_extreme_path_gives_zero_distance() {
        // a strongly negative drift with one replication of length 1 can
        // still move up; use increments that never do
        let m = IncrementModel::poisson_batch(1e-12, 1.0).unwrap();
        let mut cfg = SimConfig::new(m.clone(), 5, 1, 4);
        cfg.keep_extreme = true;
        let out = run(&cfg).unwrap();
        assert_eq!(out.extreme_mean, 0.0);
        let cmp = compare_extreme_to_theory(&out, &m, &SolverConfig::default()).unwrap().unwrap();
        assert_eq!(cmp.z_obs, 0.0);
        assert_eq!(cmp.sup_distance, 0.0);
        assert_eq!(cmp.l1_distance, 0.0);
    }
}
