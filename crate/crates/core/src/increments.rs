//! Increment laws of the reflected walk and their pointwise rate calculus.
//!
//! Every family exposes its cumulant generating function `Λ(θ)`, the local
//! rate function `I = Λ*`, the gradient `∇I` and its inverse, plus the
//! integrals over a smooth path segment that the variational solver needs
//! (see [`Segment`]).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extended::Extended;
use crate::numerics::{self, golden_section_min};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid {family} parameters: {reason}")]
    InvalidParameter { family: Family, reason: String },
    #[error("x = {x} is outside the open domain of I")]
    Domain { x: f64 },
    #[error("s = {s} is outside the range of the gradient of I")]
    Range { s: f64 },
    #[error("rate function is not convex near x = {x} (midpoint excess {excess:e})")]
    NotConvex { x: f64, excess: f64 },
    #[error("custom model `{0}` has no sampler")]
    NoSampler(String),
    #[error("custom model `{0}` cannot be serialized")]
    NotSerializable(String),
}

/// Which increment law a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    PoissonBatch,
    ShiftedExponential,
    Bernoulli,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::PoissonBatch => "poisson_batch",
            Family::ShiftedExponential => "shifted_exponential",
            Family::Bernoulli => "bernoulli",
            Family::Custom => "custom",
        })
    }
}

/// Wire form of a model: `{"family": ..., "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Gaussian { delta: f64, sigma2: f64 },
    PoissonBatch { alpha: f64, mu: f64 },
    ShiftedExponential { alpha: f64, mu: f64 },
    Bernoulli { alpha: f64 },
}

pub type RateFn = Arc<dyn Fn(f64) -> Extended + Send + Sync>;
pub type SampleFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A user-supplied convex local rate function.
#[derive(Clone)]
pub struct CustomRate {
    pub label: String,
    pub rate: RateFn,
    /// `I = +∞` below this point (use `f64::NEG_INFINITY` for none).
    pub lower: f64,
    /// Right end of the finiteness domain.
    pub r_bar: Extended,
    /// Finite interval used for convexity probing and for locating `-δ`.
    pub probe: (f64, f64),
    pub theta_up: Extended,
    pub theta_down: Extended,
    pub sampler: Option<SampleFn>,
}

impl fmt::Debug for CustomRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRate")
            .field("label", &self.label)
            .field("lower", &self.lower)
            .field("r_bar", &self.r_bar)
            .field("probe", &self.probe)
            .field("theta_up", &self.theta_up)
            .field("theta_down", &self.theta_down)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
enum Params {
    Gaussian { delta: f64, sigma2: f64 },
    PoissonBatch { alpha: f64, mu: f64 },
    ShiftedExponential { alpha: f64, mu: f64 },
    /// `kappa = ½ log((1-α)/α)`, so that `∇I(x) = atanh(x) + kappa`.
    Bernoulli { alpha: f64, kappa: f64 },
    Custom(Arc<CustomRate>),
}

/// An i.i.d. increment law with negative drift `-δ`.
#[derive(Debug, Clone)]
pub struct IncrementModel {
    params: Params,
    delta: f64,
    theta_up: Extended,
    theta_down: Extended,
    r_bar: Extended,
    coercive: bool,
}

/// Custom-family probe grid size.
pub const CONVEXITY_PROBE_POINTS: usize = 257;
/// Largest tolerated midpoint-convexity violation on the probe grid.
pub const CONVEXITY_TOLERANCE: f64 = 1e-9;
/// Relative step of the five-point difference used for custom gradients.
pub const CUSTOM_GRADIENT_STEP: f64 = 1e-3;
const CUSTOM_INVERSE_TOL: f64 = 1e-12;
const SEGMENT_QUAD_TOL: f64 = 1e-14;
/// Custom inverse gradients carry finite-difference noise near 1e-12.
const CUSTOM_SEGMENT_TOL: f64 = 1e-11;

fn invalid(family: Family, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { family, reason: reason.into() }
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl IncrementModel {
    pub fn gaussian(delta: f64, sigma2: f64) -> Result<Self, ModelError> {
        if !positive_finite(delta) || !positive_finite(sigma2) {
            return Err(invalid(Family::Gaussian, "delta and sigma2 must be positive"));
        }
        Ok(Self {
            params: Params::Gaussian { delta, sigma2 },
            delta,
            theta_up: Extended::PosInf,
            theta_down: Extended::PosInf,
            r_bar: Extended::PosInf,
            coercive: true,
        })
    }

    /// Poisson(`alpha`) arrivals minus a batch of `mu` services.
    pub fn poisson_batch(alpha: f64, mu: f64) -> Result<Self, ModelError> {
        if !positive_finite(alpha) {
            return Err(invalid(Family::PoissonBatch, "alpha must be positive"));
        }
        if !(mu.is_finite() && mu >= 1.0 && mu.fract() == 0.0) {
            return Err(invalid(Family::PoissonBatch, "mu must be a positive integer"));
        }
        if alpha >= mu {
            return Err(invalid(Family::PoissonBatch, "stability requires alpha < mu"));
        }
        Ok(Self {
            params: Params::PoissonBatch { alpha, mu },
            delta: mu - alpha,
            theta_up: Extended::PosInf,
            theta_down: Extended::PosInf,
            r_bar: Extended::PosInf,
            coercive: true,
        })
    }

    /// Exponential(`alpha`) service minus the deterministic gap `1/mu`.
    pub fn shifted_exponential(alpha: f64, mu: f64) -> Result<Self, ModelError> {
        if !positive_finite(alpha) || !positive_finite(mu) {
            return Err(invalid(Family::ShiftedExponential, "alpha and mu must be positive"));
        }
        if mu >= alpha {
            return Err(invalid(Family::ShiftedExponential, "stability requires mu < alpha"));
        }
        Ok(Self {
            params: Params::ShiftedExponential { alpha, mu },
            delta: 1.0 / mu - 1.0 / alpha,
            theta_up: Extended::Finite(alpha),
            theta_down: Extended::PosInf,
            r_bar: Extended::PosInf,
            coercive: true,
        })
    }

    /// `+1` with probability `alpha`, `-1` otherwise.
    pub fn bernoulli(alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(invalid(Family::Bernoulli, "alpha must lie in (0, 1/2)"));
        }
        Ok(Self {
            params: Params::Bernoulli { alpha, kappa: 0.5 * ((1.0 - alpha) / alpha).ln() },
            delta: 1.0 - 2.0 * alpha,
            theta_up: Extended::PosInf,
            theta_down: Extended::PosInf,
            r_bar: Extended::Finite(1.0),
            coercive: false,
        })
    }

    /// Wraps a user rate function after checking convexity on the probe grid
    /// and locating its zero `-δ`.
    pub fn custom(spec: CustomRate) -> Result<Self, ModelError> {
        let (lo, hi) = spec.probe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(Family::Custom, "probe interval must be finite and non-empty"));
        }
        check_convexity(&*spec.rate, lo, hi)?;
        let rate_f = |x: f64| (spec.rate)(x).to_f64();
        let min = golden_section_min(rate_f, lo, hi, 1e-12);
        if min.value.abs() > 1e-8 {
            return Err(invalid(
                Family::Custom,
                format!("minimum of I on the probe interval is {} (expected 0)", min.value),
            ));
        }
        let delta = -min.x;
        if delta <= 0.0 {
            return Err(invalid(Family::Custom, "the zero of I must be negative (stable drift)"));
        }
        let coercive = match spec.r_bar {
            Extended::PosInf => true,
            Extended::Finite(r) => (spec.rate)(r).is_infinite(),
        };
        if !coercive && spec.theta_up.is_finite() {
            return Err(invalid(Family::Custom, "a non-coercive rate requires theta_up = inf"));
        }
        Ok(Self {
            delta,
            theta_up: spec.theta_up,
            theta_down: spec.theta_down,
            r_bar: spec.r_bar,
            coercive,
            params: Params::Custom(Arc::new(spec)),
        })
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self, ModelError> {
        match spec {
            ModelSpec::Gaussian { delta, sigma2 } => Self::gaussian(delta, sigma2),
            ModelSpec::PoissonBatch { alpha, mu } => Self::poisson_batch(alpha, mu),
            ModelSpec::ShiftedExponential { alpha, mu } => Self::shifted_exponential(alpha, mu),
            ModelSpec::Bernoulli { alpha } => Self::bernoulli(alpha),
        }
    }

    pub fn spec(&self) -> Result<ModelSpec, ModelError> {
        Ok(match &self.params {
            Params::Gaussian { delta, sigma2 } => ModelSpec::Gaussian { delta: *delta, sigma2: *sigma2 },
            Params::PoissonBatch { alpha, mu } => ModelSpec::PoissonBatch { alpha: *alpha, mu: *mu },
            Params::ShiftedExponential { alpha, mu } => {
                ModelSpec::ShiftedExponential { alpha: *alpha, mu: *mu }
            }
            Params::Bernoulli { alpha, .. } => ModelSpec::Bernoulli { alpha: *alpha },
            Params::Custom(c) => return Err(ModelError::NotSerializable(c.label.clone())),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelJsonError> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        Ok(Self::from_spec(spec)?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string(&self.spec()?).expect("model spec serializes"))
    }

    pub fn family(&self) -> Family {
        match self.params {
            Params::Gaussian { .. } => Family::Gaussian,
            Params::PoissonBatch { .. } => Family::PoissonBatch,
            Params::ShiftedExponential { .. } => Family::ShiftedExponential,
            Params::Bernoulli { .. } => Family::Bernoulli,
            Params::Custom(_) => Family::Custom,
        }
    }

    /// Magnitude of the mean drift, `-E[X₀]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta_up(&self) -> Extended {
        self.theta_up
    }

    pub fn theta_down(&self) -> Extended {
        self.theta_down
    }

    /// `sup{r : I(r) < ∞}`.
    pub fn r_bar(&self) -> Extended {
        self.r_bar
    }

    pub fn is_coercive(&self) -> bool {
        self.coercive
    }

    /// Left end of the finiteness domain of `I` (open except for custom models).
    fn lower(&self) -> f64 {
        match &self.params {
            Params::Gaussian { .. } => f64::NEG_INFINITY,
            Params::PoissonBatch { mu, .. } => -mu,
            Params::ShiftedExponential { mu, .. } => -1.0 / mu,
            Params::Bernoulli { .. } => -1.0,
            Params::Custom(c) => c.lower,
        }
    }

    /// `log E[exp(θ X₀)]`.
    pub fn cgf(&self, theta: f64) -> Extended {
        match &self.params {
            Params::Gaussian { delta, sigma2 } => {
                Extended::Finite(-delta * theta + 0.5 * sigma2 * theta * theta)
            }
            Params::PoissonBatch { alpha, mu } => Extended::from(alpha * theta.exp_m1() - mu * theta),
            Params::ShiftedExponential { alpha, mu } => {
                if theta >= *alpha {
                    Extended::PosInf
                } else {
                    Extended::Finite(-(-theta / alpha).ln_1p() - theta / mu)
                }
            }
            Params::Bernoulli { alpha, .. } => {
                // log(α e^θ + (1-α) e^{-θ}), evaluated without overflow
                let (a, b) = (alpha.ln() + theta, (1.0 - alpha).ln() - theta);
                let m = a.max(b);
                Extended::from(m + ((a - m).exp() + (b - m).exp()).ln())
            }
            Params::Custom(c) => self.custom_cgf(c, theta),
        }
    }

    fn custom_cgf(&self, c: &CustomRate, theta: f64) -> Extended {
        if (theta > 0.0 && self.theta_up <= theta) || (theta < 0.0 && self.theta_down <= -theta) {
            return Extended::PosInf;
        }
        // Legendre transform of a convex I: sup attained at ∇I(x) = θ, or at
        // the right end when θ exceeds the gradient range there.
        match self.inv_grad(theta) {
            Ok(x) => match (c.rate)(x) {
                Extended::Finite(ix) => Extended::Finite(theta * x - ix),
                Extended::PosInf => Extended::PosInf,
            },
            Err(_) => match self.r_bar {
                Extended::Finite(r) if theta > 0.0 => match (c.rate)(r) {
                    Extended::Finite(ir) => Extended::Finite(theta * r - ir),
                    Extended::PosInf => Extended::PosInf,
                },
                _ => Extended::PosInf,
            },
        }
    }

    /// Local rate function `I(x)`.
    pub fn rate(&self, x: f64) -> Extended {
        match &self.params {
            Params::Gaussian { delta, sigma2 } => Extended::Finite((x + delta).powi(2) / (2.0 * sigma2)),
            Params::PoissonBatch { alpha, mu } => {
                let y = x + mu;
                if y <= 0.0 {
                    Extended::PosInf
                } else {
                    Extended::Finite(alpha - y + y * (y / alpha).ln())
                }
            }
            Params::ShiftedExponential { alpha, mu } => {
                let y = alpha * (x + 1.0 / mu);
                if y <= 0.0 {
                    Extended::PosInf
                } else {
                    Extended::Finite(y - y.ln() - 1.0)
                }
            }
            Params::Bernoulli { alpha, .. } => {
                if x.abs() > 1.0 {
                    return Extended::PosInf;
                }
                let p = 0.5 * (1.0 + x);
                let q = 0.5 * (1.0 - x);
                Extended::Finite(xlogy(p, p / alpha) + xlogy(q, q / (1.0 - alpha)))
            }
            Params::Custom(c) => {
                if x < c.lower || self.r_bar < x {
                    Extended::PosInf
                } else {
                    (c.rate)(x)
                }
            }
        }
    }

    fn in_open_domain(&self, x: f64) -> bool {
        x > self.lower() && self.r_bar > x
    }

    /// `∇I(x)` on the open finiteness domain.
    pub fn grad_rate(&self, x: f64) -> Result<f64, ModelError> {
        if !self.in_open_domain(x) || x.is_nan() {
            return Err(ModelError::Domain { x });
        }
        Ok(match &self.params {
            Params::Gaussian { delta, sigma2 } => (x + delta) / sigma2,
            Params::PoissonBatch { alpha, mu } => ((x + mu) / alpha).ln(),
            Params::ShiftedExponential { alpha, mu } => alpha - 1.0 / (x + 1.0 / mu),
            Params::Bernoulli { kappa, .. } => x.atanh() + kappa,
            Params::Custom(c) => {
                let mut h = CUSTOM_GRADIENT_STEP * x.abs().max(1.0);
                // keep all stencil points inside the domain
                h = h.min(0.4 * (x - c.lower));
                if let Extended::Finite(r) = self.r_bar {
                    h = h.min(0.4 * (r - x));
                }
                let f = |y: f64| (c.rate)(y).to_f64();
                (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
            }
        })
    }

    /// The unique `x` with `∇I(x) = s`.
    pub fn inv_grad(&self, s: f64) -> Result<f64, ModelError> {
        if s.is_nan() {
            return Err(ModelError::Range { s });
        }
        match &self.params {
            Params::Gaussian { delta, sigma2 } => Ok(sigma2 * s - delta),
            Params::PoissonBatch { alpha, mu } => Ok(alpha * s.exp() - mu),
            Params::ShiftedExponential { alpha, mu } => {
                if s >= *alpha {
                    Err(ModelError::Range { s })
                } else {
                    Ok(1.0 / (alpha - s) - 1.0 / mu)
                }
            }
            Params::Bernoulli { kappa, .. } => Ok((s - kappa).tanh()),
            Params::Custom(c) => self.custom_inv_grad(c, s),
        }
    }

    fn custom_inv_grad(&self, c: &CustomRate, s: f64) -> Result<f64, ModelError> {
        let x0 = -self.delta;
        if s == 0.0 {
            return Ok(x0);
        }
        let f = |x: f64| self.grad_rate(x).map(|g| g - s).unwrap_or(f64::NAN);
        let dir = s.signum();
        let edge = if dir > 0.0 { self.r_bar.to_f64() } else { c.lower };
        // walk away from -δ, doubling the step and halving the distance to a
        // finite domain edge, until ∇I - s changes sign
        let (mut prev, mut step) = (x0, 1.0f64.max(self.delta));
        for _ in 0..400 {
            let mut cand = x0 + dir * step;
            if (cand - edge) * dir >= 0.0 {
                cand = prev + 0.5 * (edge - prev);
            }
            if cand == prev {
                break;
            }
            let fc = f(cand);
            if fc.is_nan() {
                break;
            }
            if fc * dir >= 0.0 {
                let (lo, hi) = if prev < cand { (prev, cand) } else { (cand, prev) };
                return numerics::brent(f, lo, hi, CUSTOM_INVERSE_TOL).map_err(|_| ModelError::Range { s });
            }
            prev = cand;
            step *= 2.0;
        }
        Err(ModelError::Range { s })
    }

    /// Supremum of the gradient levels `λ·(remaining time)` a smooth segment
    /// can reach.
    pub(crate) fn level_sup(&self) -> Extended {
        match &self.params {
            Params::ShiftedExponential { alpha, .. } => Extended::Finite(*alpha),
            Params::Custom(_) => match self.r_bar {
                Extended::PosInf => self.theta_up,
                Extended::Finite(r) => {
                    let x = r - 1e-6 * r.abs().max(1.0);
                    self.grad_rate(x).map(Extended::Finite).unwrap_or(Extended::PosInf)
                }
            },
            _ => Extended::PosInf,
        }
    }

    /// Slope of a smooth segment at gradient level `level`.
    pub(crate) fn slope_at(&self, level: Level) -> f64 {
        match (&self.params, level.gap) {
            (Params::ShiftedExponential { mu, .. }, Extended::Finite(gap)) => 1.0 / gap - 1.0 / mu,
            _ => self
                .inv_grad(level.s)
                .expect("level inside gradient range"),
        }
    }

    /// Integrals of the inverse gradient `g = (∇I)⁻¹` over `[0, s]`.
    pub(crate) fn segment(&self, level: Level) -> Segment {
        let s = level.s;
        if s == 0.0 {
            return Segment::default();
        }
        match &self.params {
            Params::Gaussian { delta, sigma2 } => Segment {
                rise: 0.5 * sigma2 * s * s - delta * s,
                area: sigma2 * s.powi(3) / 3.0 - 0.5 * delta * s * s,
                cost: sigma2 * s.powi(3) / 6.0,
            },
            Params::PoissonBatch { alpha, mu } => Segment {
                rise: alpha * s.exp_m1() - mu * s,
                area: alpha * poisson_area_kernel(s) - 0.5 * mu * s * s,
                cost: alpha * poisson_cost_kernel(s),
            },
            Params::ShiftedExponential { alpha, mu } => {
                let x = s / alpha;
                // near the singularity only the gap carries the precision
                let log_ratio = match level.gap {
                    Extended::Finite(gap) if x > 0.5 => (alpha / gap).ln(),
                    _ => -(-x).ln_1p(),
                };
                // L - x and 2(L - x) - xL, both O(x²) for small x
                let (l_minus_x, cost_kernel) = if x < 0.25 {
                    series_log_excess(x)
                } else {
                    (log_ratio - x, 2.0 * (log_ratio - x) - x * log_ratio)
                };
                Segment {
                    rise: log_ratio - s / mu,
                    area: alpha * l_minus_x - s * s / (2.0 * mu),
                    cost: alpha * cost_kernel,
                }
            }
            Params::Bernoulli { alpha, kappa } => bernoulli_segment(*alpha, *kappa, s),
            Params::Custom(c) => {
                let [rise, area, cost] = numerics::integrate_many(
                    |u| {
                        let x = self.inv_grad(u).unwrap_or(f64::NAN);
                        [x, u * x, (c.rate)(x).to_f64()]
                    },
                    0.0,
                    s,
                    CUSTOM_SEGMENT_TOL * s.max(1.0),
                );
                Segment { rise, area, cost }
            }
        }
    }

    /// Builds a reusable draw-by-draw sampler.
    pub fn sampler(&self) -> Result<IncrementSampler, ModelError> {
        Ok(match &self.params {
            Params::Gaussian { delta, sigma2 } => {
                IncrementSampler::Gaussian(Normal::new(-delta, sigma2.sqrt()).expect("valid normal"))
            }
            Params::PoissonBatch { alpha, mu } => {
                IncrementSampler::Poisson(Poisson::new(*alpha).expect("valid poisson"), *mu)
            }
            Params::ShiftedExponential { alpha, mu } => {
                IncrementSampler::Exponential(Exp::new(*alpha).expect("valid exponential"), 1.0 / mu)
            }
            Params::Bernoulli { alpha, .. } => IncrementSampler::Bernoulli(*alpha),
            Params::Custom(c) => match &c.sampler {
                Some(f) => IncrementSampler::Custom(f.clone()),
                None => return Err(ModelError::NoSampler(c.label.clone())),
            },
        })
    }

    /// One draw of `X₀`.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Result<f64, ModelError> {
        Ok(self.sampler()?.draw(rng))
    }
}

impl fmt::Display for IncrementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.params {
            Params::Gaussian { delta, sigma2 } => write!(f, "gaussian(delta={delta}, sigma2={sigma2})"),
            Params::PoissonBatch { alpha, mu } => write!(f, "poisson_batch(alpha={alpha}, mu={mu})"),
            Params::ShiftedExponential { alpha, mu } => {
                write!(f, "shifted_exponential(alpha={alpha}, mu={mu})")
            }
            Params::Bernoulli { alpha, .. } => write!(f, "bernoulli(alpha={alpha})"),
            Params::Custom(c) => write!(f, "custom({})", c.label),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelJsonError {
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A gradient level `s` together with its distance to the top of the
/// gradient range, kept separately so levels just below a finite `θ↑`
/// remain resolvable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub s: f64,
    pub gap: Extended,
}

impl Level {
    pub fn new(s: f64, sup: Extended) -> Self {
        match sup {
            Extended::PosInf => Level { s, gap: Extended::PosInf },
            Extended::Finite(top) => Level { s, gap: Extended::Finite(top - s) },
        }
    }

    /// Level at distance `gap` below a finite supremum `top`.
    pub fn below(top: f64, gap: f64) -> Self {
        Level { s: top - gap, gap: Extended::Finite(gap) }
    }

    /// Moves the level down by `ds ≥ 0`.
    pub fn lowered(self, ds: f64) -> Self {
        Level { s: self.s - ds, gap: self.gap + ds }
    }
}

/// For the smooth segment with slope `g(u)` at gradient level `u`, the
/// integrals over `u ∈ [0, s]` of `g(u)`, `u·g(u)` and `I(g(u))`.
///
/// A segment of duration `L` and multiplier `λ = s/L` rises by `rise/λ`,
/// encloses `area/λ²` above its starting height and costs `cost/λ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Segment {
    pub rise: f64,
    pub area: f64,
    pub cost: f64,
}

/// Prepared sampler for one increment law.
#[derive(Clone)]
pub enum IncrementSampler {
    Gaussian(Normal<f64>),
    Poisson(Poisson<f64>, f64),
    Exponential(Exp<f64>, f64),
    Bernoulli(f64),
    Custom(SampleFn),
}

impl IncrementSampler {
    #[inline]
    pub fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        match self {
            IncrementSampler::Gaussian(d) => d.sample(rng),
            IncrementSampler::Poisson(d, mu) => d.sample(rng) - mu,
            IncrementSampler::Exponential(d, shift) => d.sample(rng) - shift,
            IncrementSampler::Bernoulli(alpha) => {
                if rng.random::<f64>() < *alpha {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementSampler::Custom(f) => f(rng),
        }
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `s e^s - e^s + 1 = Σ_{k≥2} (k-1) s^k / k!`.
fn poisson_area_kernel(s: f64) -> f64 {
    if s.abs() < 0.5 {
        let (mut term, mut sum) = (s, 0.0);
        for k in 2..40 {
            term *= s / k as f64;
            sum += (k - 1) as f64 * term;
        }
        sum
    } else {
        s * s.exp() - s.exp_m1()
    }
}

/// `s + s e^s - 2(e^s - 1) = Σ_{k≥3} (k-2) s^k / k!`.
fn poisson_cost_kernel(s: f64) -> f64 {
    if s.abs() < 0.5 {
        let (mut term, mut sum) = (s, 0.0);
        for k in 2..40 {
            term *= s / k as f64;
            sum += (k as f64 - 2.0) * term;
        }
        sum
    } else {
        s + s * s.exp() - 2.0 * s.exp_m1()
    }
}

/// With `L = -log(1-x)`: `(L - x, 2(L - x) - xL)` by their power series.
fn series_log_excess(x: f64) -> (f64, f64) {
    let (mut pow, mut excess, mut cost) = (x, 0.0, 0.0);
    for k in 2..80 {
        pow *= x;
        let kf = k as f64;
        excess += pow / kf;
        cost += pow * (kf - 2.0) / (kf * (kf - 1.0));
    }
    (excess, cost)
}

/// `log cosh y` without overflow.
fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Past `κ + TAIL` the Bernoulli integrands equal their limits to within
/// `e^{-2·TAIL}`.
const BERNOULLI_TAIL: f64 = 20.0;

fn bernoulli_segment(alpha: f64, kappa: f64, s: f64) -> Segment {
    let rise = log_cosh(s - kappa) - log_cosh(kappa);
    let cut = s.min(kappa + BERNOULLI_TAIL);
    let rate_of_level = |u: f64| {
        // I(tanh w) with p = (1 + tanh w)/2 = 1/(1 + e^{-2w})
        let w = u - kappa;
        let p = 1.0 / (1.0 + (-2.0 * w).exp());
        let q = 1.0 / (1.0 + (2.0 * w).exp());
        xlogy(p, p / alpha) + xlogy(q, q / (1.0 - alpha))
    };
    let mut area = numerics::integrate(|u| u * (u - kappa).tanh(), 0.0, cut, SEGMENT_QUAD_TOL);
    let mut cost = numerics::integrate(rate_of_level, 0.0, cut, SEGMENT_QUAD_TOL);
    if s > cut {
        area += 0.5 * (s * s - cut * cut);
        cost += (s - cut) * (-alpha.ln());
    }
    Segment { rise, area, cost }
}

fn check_convexity(rate: &(dyn Fn(f64) -> Extended + Send + Sync), lo: f64, hi: f64) -> Result<(), ModelError> {
    let n = CONVEXITY_PROBE_POINTS;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<Extended> = xs.iter().map(|&x| rate(x)).collect();
    let mut k = 1;
    while 2 * k < n {
        for i in k..n - k {
            let (Extended::Finite(a), Extended::Finite(m), Extended::Finite(b)) =
                (vals[i - k], vals[i], vals[i + k])
            else {
                // +∞ at the ends is fine; +∞ strictly between finite values is not
                if vals[i].is_infinite() && vals[i - k].is_finite() && vals[i + k].is_finite() {
                    return Err(ModelError::NotConvex { x: xs[i], excess: f64::INFINITY });
                }
                continue;
            };
            let excess = m - 0.5 * (a + b);
            if excess > CONVEXITY_TOLERANCE {
                return Err(ModelError::NotConvex { x: xs[i], excess });
            }
        }
        k *= 2;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> IncrementModel {
        IncrementModel::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn cgf_examples() {
        assert_eq!(gauss().cgf(0.0), Extended::ZERO);
        assert_eq!(gauss().cgf(2.0), Extended::ZERO);
        let de = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        assert_eq!(de.cgf(2.0), Extended::PosInf);
        assert!(de.cgf(1.999).is_finite());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(gauss().rate(-1.0), Extended::ZERO);
        assert_eq!(gauss().rate(0.0), Extended::Finite(0.5));
        let b = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        let r1 = b.rate(1.0).finite().unwrap();
        assert!((r1 - 3f64.ln()).abs() < 1e-15);
        assert_eq!(b.rate(1.5), Extended::PosInf);
        let p = IncrementModel::poisson_batch(0.5, 1.0).unwrap();
        assert_eq!(p.rate(-1.0), Extended::PosInf);
        let e = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        assert_eq!(e.rate(-1.0), Extended::PosInf);
    }

    #[test]
    fn gradient_examples() {
        for m in [
            gauss(),
            IncrementModel::poisson_batch(0.5, 1.0).unwrap(),
            IncrementModel::shifted_exponential(2.0, 1.0).unwrap(),
            IncrementModel::bernoulli(1.0 / 3.0).unwrap(),
        ] {
            assert!(m.grad_rate(-m.delta()).unwrap().abs() < 1e-15, "{m}");
            assert!((m.inv_grad(0.0).unwrap() + m.delta()).abs() < 1e-15, "{m}");
        }
        let p = IncrementModel::poisson_batch(0.5, 1.0).unwrap();
        assert!((p.grad_rate(0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(gauss().inv_grad(2.0).unwrap(), 1.0);
        let b = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        assert_eq!(b.inv_grad(1e6).unwrap(), 1.0);
        assert!(matches!(b.grad_rate(1.0), Err(ModelError::Domain { .. })));
        let e = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        assert!(matches!(e.inv_grad(2.0), Err(ModelError::Range { .. })));
    }

    #[test]
    fn bernoulli_gradient_matches_finite_difference() {
        // oracle: centered difference of the rate with h = 1e-8
        let b = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        let h = 1e-8;
        let fd = (b.rate(h).to_f64() - b.rate(-h).to_f64()) / (2.0 * h);
        assert!((fd - 0.5 * 2f64.ln()).abs() < 1e-7);
        assert!((b.grad_rate(0.0).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn family_constants() {
        let p = IncrementModel::poisson_batch(0.5, 2.0).unwrap();
        assert_eq!(p.delta(), 1.5);
        let e = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        assert_eq!(e.delta(), 0.5);
        assert_eq!(e.theta_up(), Extended::Finite(2.0));
        assert!(e.is_coercive());
        let b = IncrementModel::bernoulli(0.3).unwrap();
        assert!((b.delta() - 0.4).abs() < 1e-15);
        assert_eq!(b.r_bar(), Extended::Finite(1.0));
        assert!(!b.is_coercive());
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(IncrementModel::poisson_batch(0.5, 1.5).is_err());
        assert!(IncrementModel::poisson_batch(1.5, 1.0).is_err());
        assert!(IncrementModel::shifted_exponential(1.0, 2.0).is_err());
        assert!(IncrementModel::bernoulli(0.5).is_err());
        assert!(IncrementModel::gaussian(-1.0, 1.0).is_err());
    }

    #[test]
    fn json_field_names() {
        let m = IncrementModel::from_json(r#"{"family":"gaussian","params":{"delta":1,"sigma2":2}}"#).unwrap();
        assert_eq!(m.family(), Family::Gaussian);
        assert_eq!(m.to_json().unwrap(), r#"{"family":"gaussian","params":{"delta":1.0,"sigma2":2.0}}"#);
        for text in [
            r#"{"family":"poisson_batch","params":{"alpha":0.5,"mu":1}}"#,
            r#"{"family":"shifted_exponential","params":{"alpha":2,"mu":1}}"#,
            r#"{"family":"bernoulli","params":{"alpha":0.3}}"#,
        ] {
            IncrementModel::from_json(text).unwrap();
        }
        assert!(IncrementModel::from_json(r#"{"family":"bernoulli","params":{"p":0.3}}"#).is_err());
        assert!(IncrementModel::from_json(r#"{"family":"poisson_batch","params":{"alpha":0.5,"mu":1.5}}"#).is_err());
    }

    #[test]
    fn sampler_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = IncrementModel::bernoulli(0.3).unwrap();
        let p = IncrementModel::poisson_batch(0.5, 1.0).unwrap();
        for _ in 0..1000 {
            let x = b.sample(&mut rng).unwrap();
            assert!(x == 1.0 || x == -1.0);
            let y = p.sample(&mut rng).unwrap();
            assert!(y >= -1.0 && y.fract() == 0.0);
        }
    }

    #[test]
    fn gaussian_sample_mean_within_clt_bound() {
        // 3σ/√N with σ = 1, N = 10⁶
        let m = IncrementModel::gaussian(0.5, 1.0).unwrap();
        let s = m.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.draw(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean + 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn custom_rejects_nonconvex() {
        let spec = CustomRate {
            label: "wiggle".into(),
            rate: Arc::new(|x: f64| Extended::Finite((x + 1.0).powi(2) + 0.1 * (8.0 * x).sin().powi(2))),
            lower: f64::NEG_INFINITY,
            r_bar: Extended::PosInf,
            probe: (-3.0, 3.0),
            theta_up: Extended::PosInf,
            theta_down: Extended::PosInf,
            sampler: None,
        };
        assert!(matches!(IncrementModel::custom(spec), Err(ModelError::NotConvex { .. })));
    }

    #[test]
    fn custom_gaussian_matches_analytic_family() {
        let spec = CustomRate {
            label: "gauss".into(),
            rate: Arc::new(|x: f64| Extended::Finite(0.5 * (x + 1.0).powi(2))),
            lower: f64::NEG_INFINITY,
            r_bar: Extended::PosInf,
            probe: (-4.0, 2.0),
            theta_up: Extended::PosInf,
            theta_down: Extended::PosInf,
            sampler: None,
        };
        let c = IncrementModel::custom(spec).unwrap();
        let g = gauss();
        assert!((c.delta() - 1.0).abs() < 1e-6);
        for x in [-2.5, -1.0, 0.0, 0.7] {
            assert!((c.grad_rate(x).unwrap() - g.grad_rate(x).unwrap()).abs() < 1e-7);
        }
        for s in [-1.0, 0.3, 2.0] {
            assert!((c.inv_grad(s).unwrap() - g.inv_grad(s).unwrap()).abs() < 1e-6);
        }
        assert!((c.cgf(1.5).to_f64() - g.cgf(1.5).to_f64()).abs() < 1e-6);
        assert!(matches!(c.sample(&mut ChaCha8Rng::seed_from_u64(1)), Err(ModelError::NoSampler(_))));
    }

    #[test]
    fn segment_integrals_match_quadrature() {
        // independent route: integrate inv_grad directly
        let models = [
            gauss(),
            IncrementModel::poisson_batch(0.5, 1.0).unwrap(),
            IncrementModel::shifted_exponential(2.0, 1.0).unwrap(),
            IncrementModel::bernoulli(0.3).unwrap(),
        ];
        for m in &models {
            for s in [1e-3, 0.1, 0.4, 1.0, 1.9] {
                let level = Level::new(s, m.level_sup());
                let seg = m.segment(level);
                let g = |u: f64| m.inv_grad(u).unwrap();
                let rise = numerics::integrate(g, 0.0, s, 1e-14);
                let area = numerics::integrate(|u| u * g(u), 0.0, s, 1e-14);
                let cost = numerics::integrate(|u| m.rate(g(u)).to_f64(), 0.0, s, 1e-14);
                assert!((seg.rise - rise).abs() < 1e-12, "{m} s={s} rise");
                assert!((seg.area - area).abs() < 1e-12, "{m} s={s} area");
                assert!((seg.cost - cost).abs() < 1e-12, "{m} s={s} cost {} {}", seg.cost, cost);
            }
        }
    }

    #[test]
    fn exponential_segment_near_singularity() {
        let m = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        let level = Level::below(2.0, 1e-12);
        let seg = m.segment(level);
        let l = (2.0f64 / 1e-12).ln();
        assert!((seg.rise - (l - 2.0)).abs() < 1e-9);
    }
}
