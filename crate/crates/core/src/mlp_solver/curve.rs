//! Rate curves with located regime transitions.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::extended::Extended;
use crate::increments::IncrementModel;

use super::{solve_path_with, Branch, MostLikelyPath, SolveError};

/// Structural flags distinguishing the regimes of the rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Regime {
    /// The excursion ends before `t = 1`.
    pub interior: bool,
    pub jump: bool,
    /// A cap-slope prefix of positive length.
    pub prefix: bool,
}

/// Jumps and prefixes shorter than this are treated as absent.
const STRUCTURE_FLOOR: f64 = 1e-7;

impl Regime {
    pub fn of(path: &MostLikelyPath) -> Self {
        Regime {
            interior: path.branch == Branch::Interior,
            jump: path.jump > STRUCTURE_FLOOR,
            prefix: path.t00 - path.t0 > STRUCTURE_FLOOR,
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.interior, self.jump, self.prefix) {
            (true, false, false) => "interior",
            (false, false, false) => "terminal",
            (true, true, _) => "interior+jump",
            (false, true, _) => "terminal+jump",
            (true, false, true) => "interior+prefix",
            (false, false, true) => "terminal+prefix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub z: f64,
    pub rate: Extended,
    pub path: Option<MostLikelyPath>,
    #[serde(serialize_with = "error_string")]
    pub error: Option<SolveError>,
}

fn error_string<S: serde::Serializer>(e: &Option<SolveError>, s: S) -> Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_string()),
        None => s.serialize_none(),
    }
}

/// A change of regime between `lo` and `hi` (`hi - lo ≤` the transition
/// tolerance); `z` is the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub z: f64,
    pub lo: f64,
    pub hi: f64,
    pub from: Regime,
    pub to: Regime,
}

impl Transition {
    pub fn is_jump_onset(&self) -> bool {
        !self.from.jump && self.to.jump
    }

    pub fn is_terminal_onset(&self) -> bool {
        self.from.interior && !self.to.interior
    }

    pub fn is_prefix_onset(&self) -> bool {
        !self.from.prefix && self.to.prefix
    }
}

#[derive(Debug, Clone)]
pub struct RateCurve {
    pub model: IncrementModel,
    pub points: Vec<CurvePoint>,
    pub transitions: Vec<Transition>,
}

impl RateCurve {
    pub fn first_transition(&self, pred: impl Fn(&Transition) -> bool) -> Option<&Transition> {
        self.transitions.iter().find(|t| pred(t))
    }
}

fn point(model: &IncrementModel, z: f64, config: &SolverConfig) -> CurvePoint {
    match solve_path_with(model, z, config) {
        Ok(p) => CurvePoint { z, rate: p.rate_value, path: Some(p), error: None },
        Err(e) => {
            let rate = match e {
                SolveError::Infeasible { .. } => Extended::PosInf,
                _ => Extended::Finite(f64::NAN),
            };
            CurvePoint { z, rate, path: None, error: Some(e) }
        }
    }
}

/// Solves every grid point (in parallel, merged in grid order) and bisects
/// each adjacent pair whose regimes differ.
pub fn rate_curve(model: &IncrementModel, z_grid: &[f64], config: &SolverConfig) -> RateCurve {
    let points: Vec<CurvePoint> = z_grid.par_iter().map(|&z| point(model, z, config)).collect();
    let pairs: Vec<(usize, Regime, Regime)> = points
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let (a, b) = (w[0].path.as_ref()?, w[1].path.as_ref()?);
            if a.branch == Branch::Zero || b.branch == Branch::Zero {
                return None;
            }
            let (ra, rb) = (a.regime(), b.regime());
            (ra != rb).then_some((i, ra, rb))
        })
        .collect();
    let transitions = pairs
        .par_iter()
        .filter_map(|&(i, from, to)| bisect(model, config, points[i].z, points[i + 1].z, from, to))
        .collect();
    RateCurve { model: model.clone(), points, transitions }
}

fn bisect(
    model: &IncrementModel,
    config: &SolverConfig,
    mut lo: f64,
    mut hi: f64,
    from: Regime,
    to: Regime,
) -> Option<Transition> {
    let mut to_hi = to;
    while hi - lo > config.transition_tol {
        let mid = 0.5 * (lo + hi);
        let r = solve_path_with(model, mid, config).ok()?.regime();
        if r == from {
            lo = mid;
        } else {
            hi = mid;
            to_hi = r;
        }
    }
    Some(Transition { z: 0.5 * (lo + hi), lo, hi, from, to: to_hi })
}
