//! Candidate construction for the reduced problem.
//!
//! For a jump `a` and cap-prefix length `τ` the smooth segment starts at
//! height `h0 = a + r̄τ` with `L ≤ 1 - τ` time left and area `z'` still
//! owed. With `s = λL` and the segment integrals `G1, G2, H` it rises by
//! `L·G1(s)/s`, encloses `h0·L + L²·G2(s)/s²` and costs `L·H(s)/s`. The
//! terminal branch fixes `L = 1 - τ` and solves the area equation for `s`;
//! the interior branch requires the segment to end at zero and solves the
//! endpoint and area equations jointly.

use crate::config::SolverConfig;
use crate::extended::Extended;
use crate::increments::{IncrementModel, Level, Segment};
use crate::numerics::{brent, golden_section_min, Minimum, RootError};

use super::{Branch, MostLikelyPath, SolveError};

/// Maps an unconstrained coordinate `u > 0` onto gradient levels.
///
/// Unbounded ranges use `s = u`. A finite supremum `top` (less the margin)
/// is approached as `gap = margin + cap·e^{-u}`, so the gap stays resolved
/// however close the level gets to the top.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LevelMap {
    cap: Extended,
    margin: f64,
}

/// Largest coordinate used for a finite supremum (`e^{-700}` is still normal).
const BOUNDED_U_LIMIT: f64 = 700.0;

impl LevelMap {
    pub(crate) fn new(model: &IncrementModel, config: &SolverConfig) -> Self {
        match model.level_sup() {
            Extended::PosInf => LevelMap { cap: Extended::PosInf, margin: 0.0 },
            Extended::Finite(top) => {
                let margin = config.gradient_margin.clamp(0.0, top);
                LevelMap { cap: Extended::Finite(top - margin), margin }
            }
        }
    }

    pub(crate) fn level(&self, u: f64) -> Level {
        match self.cap {
            Extended::PosInf => Level { s: u, gap: Extended::PosInf },
            Extended::Finite(cap) => Level {
                s: -cap * (-u).exp_m1(),
                gap: Extended::Finite(self.margin + cap * (-u).exp()),
            },
        }
    }

    fn u_limit(&self, config: &SolverConfig) -> f64 {
        match self.cap {
            Extended::PosInf => config.bracket_limit,
            Extended::Finite(_) => BOUNDED_U_LIMIT,
        }
    }
}

/// Segment integrals normalized per unit duration.
#[derive(Debug, Clone, Copy)]
struct Shape {
    level: Level,
    /// rise / L
    rise: f64,
    /// area above the start height / L²
    area: f64,
    /// cost / L
    cost: f64,
}

impl Shape {
    fn new(level: Level, seg: Segment) -> Self {
        let s = level.s;
        Shape { level, rise: seg.rise / s, area: seg.area / (s * s), cost: seg.cost / s }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    jump: f64,
    prefix: f64,
    len: f64,
    shape: Shape,
    branch: Branch,
    endpoint: f64,
    cost: f64,
}

struct Reduced<'a> {
    model: &'a IncrementModel,
    config: &'a SolverConfig,
    map: LevelMap,
    z: f64,
    /// Coordinate of the level where the smooth rise vanishes, if reachable.
    u_flat: Option<f64>,
}

fn finite_or_max(x: f64) -> f64 {
    if x.is_nan() {
        f64::MAX
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

impl<'a> Reduced<'a> {
    fn new(model: &'a IncrementModel, config: &'a SolverConfig, z: f64) -> Result<Self, SolveError> {
        let map = LevelMap::new(model, config);
        let mut this = Reduced { model, config, map, z, u_flat: None };
        this.u_flat = this.root_increasing(|sh| sh.rise, 0.0, "zero-rise level")?;
        Ok(this)
    }

    fn shape(&self, u: f64) -> Shape {
        let level = self.map.level(u);
        Shape::new(level, self.model.segment(level))
    }

    /// Root in `u` of an increasing function of the shape; `None` when the
    /// function never reaches `target` over the admissible levels, or
    /// already exceeds it at the floor.
    fn root_increasing<F>(&self, f: F, target: f64, context: &'static str) -> Result<Option<f64>, SolveError>
    where
        F: Fn(&Shape) -> f64,
    {
        let g = |u: f64| finite_or_max(f(&self.shape(u)) - target);
        let lo = self.config.level_floor;
        let f_lo = g(lo);
        if f_lo >= 0.0 {
            return Ok(None);
        }
        let limit = self.map.u_limit(self.config);
        let mut hi = 1.0;
        loop {
            let fh = g(hi);
            if fh >= 0.0 {
                break;
            }
            if hi >= limit {
                return Ok(None);
            }
            hi = (2.0 * hi).min(limit);
        }
        let lo = if hi > 1.0 { 0.5 * hi } else { lo };
        brent(g, lo, hi, self.config.root_xtol)
            .map(Some)
            .map_err(|source| SolveError::NonConvergence { context, source })
    }

    fn terminal(&self, h0: f64, len: f64, z_rest: f64) -> Result<Option<(f64, Shape, f64)>, SolveError> {
        let target = (z_rest - h0 * len) / (len * len);
        let Some(u) = self.root_increasing(|sh| sh.area, target, "terminal area equation")? else {
            return Ok(None);
        };
        let shape = self.shape(u);
        let endpoint = h0 + len * shape.rise;
        if endpoint < -1e-12 * h0.max(1.0) {
            return Ok(None);
        }
        Ok(Some((len, shape, endpoint.max(0.0))))
    }

    fn interior(&self, h0: f64, len_max: f64, z_rest: f64) -> Result<Option<(f64, Shape, f64)>, SolveError> {
        let Some(u_flat) = self.u_flat else {
            return Ok(None);
        };
        if h0 == 0.0 {
            let shape = self.shape(u_flat);
            let len = (z_rest / shape.area).sqrt();
            if len > len_max * (1.0 + 1e-12) {
                return Ok(None);
            }
            return Ok(Some((len.min(len_max), shape, 0.0)));
        }
        let delta = self.model.delta();
        let len_min = h0 / delta;
        if len_max <= len_min || z_rest < 0.5 * h0 * len_min {
            return Ok(None);
        }
        // level at which a segment of duration `len` falls by exactly h0
        let level_for = |len: f64| -> Result<f64, SolveError> {
            let g = |u: f64| finite_or_max(self.shape(u).rise + h0 / len);
            let lo = self.config.level_floor;
            if g(lo) >= 0.0 {
                return Ok(lo);
            }
            brent(g, lo, u_flat, self.config.root_xtol)
                .map_err(|source| SolveError::NonConvergence { context: "interior endpoint equation", source })
        };
        let area_gap = |len: f64| -> Result<f64, SolveError> {
            let sh = self.shape(level_for(len)?);
            Ok(h0 * len + len * len * sh.area - z_rest)
        };
        if area_gap(len_max)? < 0.0 {
            return Ok(None);
        }
        let lo = len_min * (1.0 + 1e-12);
        let mut failure = None;
        let f = |len: f64| match area_gap(len) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        let len = match brent(f, lo, len_max, self.config.root_xtol) {
            Ok(len) => len,
            Err(RootError::NoBracket { flo, .. }) if flo >= 0.0 => lo,
            Err(source) => {
                return Err(failure
                    .unwrap_or(SolveError::NonConvergence { context: "interior area equation", source }))
            }
        };
        let shape = self.shape(level_for(len)?);
        Ok(Some((len, shape, 0.0)))
    }

    /// Cheapest admissible smooth completion after jump `a` and prefix `τ`.
    fn candidate(&self, jump: f64, prefix: f64) -> Result<Option<Candidate>, SolveError> {
        let (h0, z_rest, fixed_cost) = if prefix > 0.0 {
            let r = self.model.r_bar().to_f64();
            let ir = self.model.rate(r).to_f64();
            (jump + r * prefix, self.z - jump * prefix - 0.5 * r * prefix * prefix, ir * prefix)
        } else {
            (jump, self.z, 0.0)
        };
        let jump_cost = if jump > 0.0 { self.model.theta_up().to_f64() * jump } else { 0.0 };
        let len_max = 1.0 - prefix;
        if z_rest <= 0.0 || len_max <= 0.0 {
            return Ok(None);
        }
        let mut best: Option<Candidate> = None;
        let options = [
            (Branch::Terminal, self.terminal(h0, len_max, z_rest)?),
            (Branch::Interior, self.interior(h0, len_max, z_rest)?),
        ];
        for (branch, found) in options {
            if let Some((len, shape, endpoint)) = found {
                let cost = fixed_cost + jump_cost + len * shape.cost;
                if best.is_none_or(|b| cost < b.cost) {
                    best = Some(Candidate { jump, prefix, len, shape, branch, endpoint, cost });
                }
            }
        }
        Ok(best)
    }

    fn cost_or_inf(&self, jump: f64, prefix: f64, failure: &mut Option<SolveError>) -> f64 {
        match self.candidate(jump, prefix) {
            Ok(Some(c)) => c.cost,
            Ok(None) => f64::INFINITY,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    }
}

/// Coarse scan followed by golden-section refinement around the best scan
/// point. Robust to an infeasible (`+∞`) region on either side.
fn scan_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Minimum {
    let n = points.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut i_best = 0;
    for i in 1..=n {
        if vals[i] < vals[i_best] {
            i_best = i;
        }
    }
    if vals[i_best].is_infinite() {
        return Minimum { x: lo, value: f64::INFINITY };
    }
    let a = xs[i_best.saturating_sub(1)];
    let b = xs[(i_best + 1).min(n)];
    let refined = golden_section_min(&mut f, a, b, tol);
    if refined.value < vals[i_best] {
        refined
    } else {
        Minimum { x: xs[i_best], value: vals[i_best] }
    }
}

pub(crate) fn solve(model: &IncrementModel, z: f64, config: &SolverConfig) -> Result<MostLikelyPath, SolveError> {
    let red = Reduced::new(model, config, z)?;
    let mut failure = None;
    let mut flat_prefix = false;
    let (jump, prefix) = if model.theta_up().is_finite() {
        // the jump search interval grows while the optimum sits on its right end
        let mut a_max = z;
        let mut best;
        loop {
            best = scan_min(|a| red.cost_or_inf(a, 0.0, &mut failure), 0.0, a_max, config.outer_scan, config.jump_tol);
            if best.value.is_finite() && best.x < a_max * (1.0 - 1e-6) || a_max > 1e6 * z.max(1.0) {
                break;
            }
            a_max *= 2.0;
        }
        (best.x, 0.0)
    } else if !model.is_coercive() {
        let r = model.r_bar().to_f64();
        let tau_max = (2.0 * z / r).sqrt().min(1.0);
        let best = scan_min(
            |tau| red.cost_or_inf(0.0, tau, &mut failure),
            0.0,
            tau_max,
            config.outer_scan,
            config.prefix_tol,
        );
        let at_zero = red.cost_or_inf(0.0, 0.0, &mut failure);
        if best.x > 0.0 && at_zero - best.value <= config.flat_tol {
            flat_prefix = best.x > config.prefix_tol;
            (0.0, 0.0)
        } else {
            (0.0, best.x)
        }
    } else {
        (0.0, 0.0)
    };
    let cand = match red.candidate(jump, prefix)? {
        Some(c) => c,
        None => return Err(failure.unwrap_or(SolveError::NoCandidate { z })),
    };
    Ok(assemble(cand, z, flat_prefix))
}

fn assemble(c: Candidate, z: f64, flat_prefix: bool) -> MostLikelyPath {
    let t00 = c.prefix;
    let t1 = c.prefix + c.len;
    let (t1, start_window) = match c.branch {
        Branch::Interior if t1 < 1.0 => (t1, [0.0, 1.0 - t1]),
        _ => (1.0, [0.0, 0.0]),
    };
    let branch = if t1 < 1.0 { Branch::Interior } else { c.branch };
    MostLikelyPath {
        t0: 0.0,
        t00,
        t1,
        jump: c.jump,
        lambda_star: Extended::Finite(c.shape.level.s / c.len),
        endpoint: if branch == Branch::Terminal { c.endpoint } else { 0.0 },
        z,
        rate_value: Extended::Finite(c.cost),
        branch,
        start_window,
        flat_prefix,
        level: c.shape.level,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp_solver::solve_path;

    #[test]
    fn gaussian_generic_route_matches_closed_form() {
        let m = IncrementModel::gaussian(1.0, 2.0).unwrap();
        let cfg = SolverConfig::default();
        for z in [0.01, 0.1, 1.0 / 6.0 + 1e-3, 0.5, 2.0] {
            let generic = solve(&m, z, &cfg).unwrap();
            let closed = solve_path(&m, z).unwrap();
            let (g, c) = (generic.rate_value.to_f64(), closed.rate_value.to_f64());
            assert!((g - c).abs() < 1e-11 * c, "z={z}: {g} vs {c}");
            assert!((generic.t1 - closed.t1).abs() < 1e-9);
        }
    }

    #[test]
    fn level_map_resolves_gap() {
        let m = IncrementModel::shifted_exponential(2.0, 1.0).unwrap();
        let map = LevelMap::new(&m, &SolverConfig::default());
        let lv = map.level(30.0);
        assert_eq!(lv.gap, Extended::Finite(2.0 * (-30f64).exp()));
        assert!((map.level(1e-12).s - 2e-12).abs() < 1e-23);
    }
}
