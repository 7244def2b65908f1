//! Most likely paths of the scaled workload area and the rate function
//! `I_W̄(z)`.
//!
//! An optimizer is zero outside `[t0, t1]`, may jump to `a` at `t0` (only
//! when `θ↑ < ∞`), climbs at the cap slope `r̄` on `[t0, t00]` (only for
//! non-coercive rates) and then follows the smooth segment whose slope at
//! time `t` is `(∇I)⁻¹(λ*(t1 - t))`. The solver reduces the problem to one
//! or two scalar root solves per candidate `(a, t00)` and minimizes over
//! the candidates.

mod curve;
mod path;
mod reduced;

use serde::Serialize;
use thiserror::Error;

use crate::config::SolverConfig;
use crate::extended::Extended;
use crate::increments::{Family, IncrementModel, Level};
use crate::numerics::RootError;

pub use curve::{rate_curve, CurvePoint, RateCurve, Regime, Transition};
pub use path::{
    check_optimality, eval_path, eval_slope, evaluate_functional, sample_path, BoundPath, OptimalityReport,
    PathView, Perturbed, SampledPath,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("target mean z = {z} must be a finite nonnegative number")]
    InvalidTarget { z: f64 },
    #[error("target z = {z} exceeds the largest attainable area {z_max}")]
    Infeasible { z: f64, z_max: f64 },
    #[error("{context}: {source}")]
    NonConvergence {
        context: &'static str,
        #[source]
        source: RootError,
    },
    #[error("no admissible candidate path for z = {z}")]
    NoCandidate { z: f64 },
}

/// Which structural case the optimizer falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `z = 0`: the identically zero path.
    Zero,
    /// The excursion returns to zero at `t1 < 1`.
    Interior,
    /// The excursion is still open at `t1 = 1` with endpoint `c ≥ 0`.
    Terminal,
    /// `ψ(t) = r̄ t`: the whole interval is spent at the cap slope.
    Linear,
}

/// Parametric form of an optimizer of the constrained variational problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MostLikelyPath {
    pub t0: f64,
    pub t00: f64,
    pub t1: f64,
    pub jump: f64,
    pub lambda_star: Extended,
    pub endpoint: f64,
    pub z: f64,
    pub rate_value: Extended,
    pub branch: Branch,
    /// Range of excursion starts giving the same cost; `t0` is its left end.
    pub start_window: [f64; 2],
    /// The prefix search found costs equal to within the flatness tolerance
    /// and `t00 = t0` was reported.
    pub flat_prefix: bool,
    /// Gradient level `λ*(t1 - t00)` at the start of the smooth segment.
    #[serde(skip)]
    pub(crate) level: Level,
}

impl MostLikelyPath {
    pub fn zero() -> Self {
        MostLikelyPath {
            t0: 0.0,
            t00: 0.0,
            t1: 0.0,
            jump: 0.0,
            lambda_star: Extended::ZERO,
            endpoint: 0.0,
            z: 0.0,
            rate_value: Extended::ZERO,
            branch: Branch::Zero,
            start_window: [0.0, 1.0],
            flat_prefix: false,
            level: Level { s: 0.0, gap: Extended::PosInf },
        }
    }

    /// `b = λ* t1`, the intercept of the Euler–Lagrange line `b - λ* t`.
    pub fn intercept(&self) -> Extended {
        self.lambda_star.scale(self.t1)
    }

    /// Duration of the smooth segment.
    pub fn smooth_len(&self) -> f64 {
        self.t1 - self.t00
    }

    /// Height at the start of the smooth segment.
    pub fn smooth_start_height(&self, model: &IncrementModel) -> f64 {
        let prefix = self.t00 - self.t0;
        if prefix > 0.0 {
            self.jump + model.r_bar().to_f64() * prefix
        } else {
            self.jump
        }
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self)
    }
}

/// Solves for the most likely path with area `z` under the default
/// tolerances.
pub fn solve_path(model: &IncrementModel, z: f64) -> Result<MostLikelyPath, SolveError> {
    solve_path_with(model, z, &SolverConfig::default())
}

pub fn solve_path_with(
    model: &IncrementModel,
    z: f64,
    config: &SolverConfig,
) -> Result<MostLikelyPath, SolveError> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(SolveError::InvalidTarget { z });
    }
    if z == 0.0 {
        return Ok(MostLikelyPath::zero());
    }
    if let Extended::Finite(r) = model.r_bar() {
        let z_max = 0.5 * r;
        if z > z_max * (1.0 + 1e-12) {
            return Err(SolveError::Infeasible { z, z_max });
        }
        if z >= z_max * (1.0 - 1e-12) {
            if model.is_coercive() {
                return Err(SolveError::Infeasible { z, z_max });
            }
            return Ok(linear_path(model, z));
        }
    }
    if model.family() == Family::Gaussian {
        return Ok(gaussian_path(model, z));
    }
    reduced::solve(model, z, config)
}

fn linear_path(model: &IncrementModel, z: f64) -> MostLikelyPath {
    let r = model.r_bar().to_f64();
    MostLikelyPath {
        t00: 1.0,
        t1: 1.0,
        lambda_star: Extended::PosInf,
        endpoint: r,
        z,
        rate_value: model.rate(r),
        branch: Branch::Linear,
        start_window: [0.0, 0.0],
        level: Level { s: 0.0, gap: Extended::PosInf },
        ..MostLikelyPath::zero()
    }
}

/// Closed form for Gaussian increments with drift `-δ` and variance `σ²`.
fn gaussian_path(model: &IncrementModel, z: f64) -> MostLikelyPath {
    let delta = model.delta();
    // σ² = 1 / I''; recover it from the gradient at the mean
    let sigma2 = 1.0 / model.grad_rate(1.0 - delta).expect("gaussian gradient");
    if z <= delta / 6.0 {
        let t1 = (6.0 * z / delta).sqrt();
        let lambda = 2.0 * delta / (sigma2 * t1);
        MostLikelyPath {
            t1,
            lambda_star: Extended::Finite(lambda),
            z,
            rate_value: Extended::Finite(4.0 * delta / sigma2 * (z * delta / 6.0).sqrt()),
            branch: Branch::Interior,
            start_window: [0.0, 1.0 - t1],
            level: Level { s: lambda * t1, gap: Extended::PosInf },
            ..MostLikelyPath::zero()
        }
    } else {
        let lambda = 3.0 * (z + 0.5 * delta) / sigma2;
        MostLikelyPath {
            t1: 1.0,
            lambda_star: Extended::Finite(lambda),
            endpoint: 1.5 * (z - delta / 6.0),
            z,
            rate_value: Extended::Finite(1.5 / sigma2 * (z + 0.5 * delta).powi(2)),
            branch: Branch::Terminal,
            start_window: [0.0, 0.0],
            level: Level { s: lambda, gap: Extended::PosInf },
            ..MostLikelyPath::zero()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> IncrementModel {
        IncrementModel::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_seam_values() {
        let p = solve_path(&gauss(), 1.0 / 6.0).unwrap();
        assert_eq!(p.t1, 1.0);
        assert!((p.rate_value.to_f64() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.endpoint, 0.0);
        let q = solve_path(&gauss(), 1.0 / 24.0).unwrap();
        assert!((q.t1 - 0.5).abs() < 1e-15);
        assert!((q.rate_value.to_f64() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.start_window, [0.0, 0.5]);
    }

    #[test]
    fn zero_target() {
        let p = solve_path(&gauss(), 0.0).unwrap();
        assert_eq!(p.branch, Branch::Zero);
        assert_eq!(p.rate_value, Extended::ZERO);
    }

    #[test]
    fn invalid_targets() {
        assert!(matches!(solve_path(&gauss(), -1.0), Err(SolveError::InvalidTarget { .. })));
        assert!(matches!(solve_path(&gauss(), f64::NAN), Err(SolveError::InvalidTarget { .. })));
        let b = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        assert!(matches!(solve_path(&b, 0.6), Err(SolveError::Infeasible { .. })));
    }

    #[test]
    fn bernoulli_half_is_linear() {
        let b = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        let p = solve_path(&b, 0.5).unwrap();
        assert_eq!(p.branch, Branch::Linear);
        assert!((p.rate_value.to_f64() - 3f64.ln()).abs() < 1e-15);
    }
}
