//! Pointwise evaluation of optimizers, the rate functional on sampled
//! paths, and first-order optimality residuals.

use serde::Serialize;

use crate::extended::Extended;
use crate::increments::{IncrementModel, Level};
use crate::numerics::integrate;

use super::{Branch, MostLikelyPath};

/// Gradient level `λ(t1 - t)` at time `t` of the smooth segment.
fn level_at(path: &MostLikelyPath, t: f64) -> (Level, f64) {
    let lambda = path.lambda_star.to_f64();
    let ds = (lambda * (t - path.t00)).clamp(0.0, path.level.s);
    (path.level.lowered(ds), lambda)
}

/// `ψ(t)`; right-continuous at `t0`, so a jump is included at `t = t0`.
pub fn eval_path(path: &MostLikelyPath, model: &IncrementModel, t: f64) -> f64 {
    if path.branch == Branch::Zero || t < path.t0 || t > path.t1 {
        return 0.0;
    }
    if t <= path.t00 {
        let climb = if path.t00 > path.t0 { model.r_bar().to_f64() * (t - path.t0) } else { 0.0 };
        return path.jump + climb;
    }
    let (lv, lambda) = level_at(path, t);
    let h0 = path.smooth_start_height(model);
    let rise = (model.segment(path.level).rise - model.segment(lv).rise) / lambda;
    (h0 + rise).max(0.0)
}

/// Left derivative `ψ̇(t⁻)` on `(t0, t1]`, zero elsewhere.
pub fn eval_slope(path: &MostLikelyPath, model: &IncrementModel, t: f64) -> f64 {
    if path.branch == Branch::Zero || t <= path.t0 || t > path.t1 {
        return 0.0;
    }
    if t <= path.t00 {
        return model.r_bar().to_f64();
    }
    model.slope_at(level_at(path, t).0)
}

/// What the optimality check needs from a candidate path.
pub trait PathView {
    fn t0(&self) -> f64;
    fn t00(&self) -> f64;
    fn t1(&self) -> f64;
    fn lambda(&self) -> f64;
    fn target(&self) -> f64;
    fn value(&self, t: f64) -> f64;
    fn slope(&self, t: f64) -> f64;
}

/// A solver path paired with its model.
#[derive(Debug, Clone, Copy)]
pub struct BoundPath<'a> {
    pub path: &'a MostLikelyPath,
    pub model: &'a IncrementModel,
}

impl PathView for BoundPath<'_> {
    fn t0(&self) -> f64 {
        self.path.t0
    }
    fn t00(&self) -> f64 {
        self.path.t00
    }
    fn t1(&self) -> f64 {
        self.path.t1
    }
    fn lambda(&self) -> f64 {
        self.path.lambda_star.to_f64()
    }
    fn target(&self) -> f64 {
        self.path.z
    }
    fn value(&self, t: f64) -> f64 {
        eval_path(self.path, self.model, t)
    }
    fn slope(&self, t: f64) -> f64 {
        eval_slope(self.path, self.model, t)
    }
}

/// Adds `amplitude·sin(π(t - t0)/(t1 - t0))` on the excursion.
#[derive(Debug, Clone, Copy)]
pub struct Perturbed<P> {
    pub base: P,
    pub amplitude: f64,
}

impl<P: PathView> PathView for Perturbed<P> {
    fn t0(&self) -> f64 {
        self.base.t0()
    }
    fn t00(&self) -> f64 {
        self.base.t00()
    }
    fn t1(&self) -> f64 {
        self.base.t1()
    }
    fn lambda(&self) -> f64 {
        self.base.lambda()
    }
    fn target(&self) -> f64 {
        self.base.target()
    }
    fn value(&self, t: f64) -> f64 {
        let (a, b) = (self.t0(), self.t1());
        let bump = if t >= a && t <= b {
            self.amplitude * (std::f64::consts::PI * (t - a) / (b - a)).sin()
        } else {
            0.0
        };
        self.base.value(t) + bump
    }
    fn slope(&self, t: f64) -> f64 {
        let (a, b) = (self.t0(), self.t1());
        let w = std::f64::consts::PI / (b - a);
        let bump = if t > a && t <= b { self.amplitude * w * (w * (t - a)).cos() } else { 0.0 };
        self.base.slope(t) + bump
    }
}

/// Residuals of the first-order conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityReport {
    /// `max |∇I(ψ̇(t)) - λ(t1 - t)|` over interior samples of the smooth
    /// segment; `None` when the segment is empty.
    pub euler_lagrange: Option<f64>,
    /// `|ψ̇(t1⁻) + δ|`; `None` when the segment is empty.
    pub terminal_slope: Option<f64>,
    /// `|∫ψ - z|`.
    pub area: f64,
    pub samples: usize,
}

impl OptimalityReport {
    pub fn max_residual(&self) -> f64 {
        [self.euler_lagrange, self.terminal_slope, Some(self.area)]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

pub fn check_optimality<P: PathView>(model: &IncrementModel, path: &P, samples: usize) -> OptimalityReport {
    let (t0, t00, t1) = (path.t0(), path.t00(), path.t1());
    let area = if t1 > t0 {
        let prefix = if t00 > t0 { integrate(|t| path.value(t), t0, t00, 1e-14) } else { 0.0 };
        let smooth = if t1 > t00 { integrate(|t| path.value(t), t00, t1, 1e-14) } else { 0.0 };
        prefix + smooth
    } else {
        0.0
    };
    let area = (area - path.target()).abs();
    if t1 <= t00 || samples == 0 {
        return OptimalityReport { euler_lagrange: None, terminal_slope: None, area, samples: 0 };
    }
    let lambda = path.lambda();
    let mut el: f64 = 0.0;
    for i in 0..samples {
        let t = t00 + (t1 - t00) * (i as f64 + 0.5) / samples as f64;
        let slope = path.slope(t);
        let level = lambda * (t1 - t);
        let r = match model.grad_rate(slope) {
            Ok(g) => (g - level).abs(),
            // the slope has rounded onto the domain edge; compare in slope space
            Err(_) => match model.inv_grad(level) {
                Ok(x) if (x - slope).abs() <= 4.0 * f64::EPSILON * slope.abs().max(1.0) => 0.0,
                _ => f64::INFINITY,
            },
        };
        el = el.max(r);
    }
    let terminal = (path.slope(t1) + model.delta()).abs();
    OptimalityReport { euler_lagrange: Some(el), terminal_slope: Some(terminal), area, samples }
}

/// A path on the uniform grid `t_i = i/n`, `i = 0..=n`.
///
/// `values[0]` is the right limit at `0`; an upward jump there is listed in
/// `jump_up` and priced separately. `jump_down` is the total downward
/// singular mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledPath {
    pub values: Vec<f64>,
    pub jump_up: f64,
    pub jump_down: f64,
}

impl SampledPath {
    pub fn zero(n: usize) -> Self {
        SampledPath { values: vec![0.0; n + 1], jump_up: 0.0, jump_down: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ψ ↦ max(0, ψ - d)`, jump included.
    pub fn clipped(&self, d: f64) -> Self {
        let shift = (self.jump_up - d).max(0.0);
        SampledPath {
            values: self.values.iter().map(|v| (v - d).max(0.0)).collect(),
            jump_up: shift,
            jump_down: self.jump_down,
        }
    }

    /// Trapezoidal area.
    pub fn area(&self) -> f64 {
        let n = self.values.len() - 1;
        let inner: f64 = self.values.windows(2).map(|w| w[0] + w[1]).sum();
        0.5 * inner / n as f64
    }
}

/// Samples `path` at `n + 1` uniform points.
pub fn sample_path(path: &MostLikelyPath, model: &IncrementModel, n: usize) -> SampledPath {
    let values = (0..=n).map(|i| eval_path(path, model, i as f64 / n as f64)).collect();
    let jump_up = if path.t0 == 0.0 { path.jump } else { 0.0 };
    SampledPath { values, jump_up, jump_down: 0.0 }
}

/// `J(ψ)`: `I(slope)·Δt` on every grid cell where `ψ` is positive somewhere,
/// nothing on cells where it stays at zero, `θ↑` per unit of upward jump
/// and `θ↓` per unit of downward jump.
pub fn evaluate_functional(model: &IncrementModel, path: &SampledPath) -> Extended {
    let n = path.values.len().saturating_sub(1);
    let mut total = Extended::ZERO;
    if path.jump_up > 0.0 {
        total += model.theta_up().scale(path.jump_up);
    }
    if path.jump_down > 0.0 {
        total += model.theta_down().scale(path.jump_down);
    }
    if n == 0 {
        return total;
    }
    let dt = 1.0 / n as f64;
    for w in path.values.windows(2) {
        if w[0] <= 0.0 && w[1] <= 0.0 {
            continue;
        }
        total += model.rate((w[1] - w[0]) / dt).scale(dt);
        if total.is_infinite() {
            break;
        }
    }
    total
}
