//! Gauss–Legendre quadrature, fixed order and adaptive.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on `P_n`, seeded with the
    /// Chebyshev-like initial guesses `cos(π(i - 1/4)/(n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

const MAX_DEPTH: u32 = 40;

/// Adaptive 20-point Gauss–Legendre integration of `f` over `[a, b]`.
///
/// A panel is accepted when the two half-panel estimates agree with the
/// whole-panel estimate to within `tol` (absolute) or to rounding level,
/// with the tolerance split between halves on refinement.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let gl = rule();
    let whole = gl.integrate(&mut f, a, b);
    adapt(&mut f, gl, a, b, whole, tol, 0)
}

fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    gl: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl.integrate(&mut *f, a, m);
    let right = gl.integrate(&mut *f, m, b);
    let refined = left + right;
    // below the rounding floor of the panel value refinement cannot help
    let floor = 16.0 * f64::EPSILON * refined.abs();
    let diff = (refined - whole).abs();
    if !diff.is_finite() || diff <= tol.max(floor) || depth >= MAX_DEPTH || m <= a || m >= b {
        return refined;
    }
    adapt(f, gl, a, m, left, 0.5 * tol, depth + 1) + adapt(f, gl, m, b, right, 0.5 * tol, depth + 1)
}

/// [`integrate`] for several integrands sharing one expensive evaluation.
/// A panel is split until every component meets `tol`.
pub fn integrate_many<const N: usize, F: FnMut(f64) -> [f64; N]>(mut f: F, a: f64, b: f64, tol: f64) -> [f64; N] {
    if a == b {
        return [0.0; N];
    }
    let gl = rule();
    let whole = panel(&mut f, gl, a, b);
    adapt_many(&mut f, gl, a, b, whole, tol, 0)
}

fn panel<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, gl: &GaussLegendre, a: f64, b: f64) -> [f64; N] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = [0.0; N];
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        let v = f(mid + half * x);
        for (s, vi) in acc.iter_mut().zip(v) {
            *s += w * vi;
        }
    }
    acc.map(|s| s * half)
}

fn adapt_many<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    gl: &GaussLegendre,
    a: f64,
    b: f64,
    whole: [f64; N],
    tol: f64,
    depth: u32,
) -> [f64; N] {
    let m = 0.5 * (a + b);
    let left = panel(f, gl, a, m);
    let right = panel(f, gl, m, b);
    let mut refined = [0.0; N];
    let mut done = true;
    for i in 0..N {
        refined[i] = left[i] + right[i];
        let diff = (refined[i] - whole[i]).abs();
        let floor = 16.0 * f64::EPSILON * refined[i].abs();
        done &= !diff.is_finite() || diff <= tol.max(floor);
    }
    if done || depth >= MAX_DEPTH || m <= a || m >= b {
        return refined;
    }
    let l = adapt_many(f, gl, a, m, left, 0.5 * tol, depth + 1);
    let r = adapt_many(f, gl, m, b, right, 0.5 * tol, depth + 1);
    std::array::from_fn(|i| l[i] + r[i])
}
