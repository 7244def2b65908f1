//! Solver tolerances. Every numerical knob lives here so a run is fully
//! described by one record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Absolute tolerance of the inner Brent solves (in the level coordinate).
    pub root_xtol: f64,
    /// Lower end of every level bracket.
    pub level_floor: f64,
    /// Bracket doubling stops here.
    pub bracket_limit: f64,
    /// Golden-section tolerance of the jump search.
    pub jump_tol: f64,
    /// Golden-section tolerance of the capped-prefix search.
    pub prefix_tol: f64,
    /// Cost differences below this count as a flat prefix search.
    pub flat_tol: f64,
    /// Coarse scan points preceding each outer golden-section search.
    pub outer_scan: usize,
    /// Width to which regime transitions are bisected.
    pub transition_tol: f64,
    /// Absolute tolerance of path quadratures.
    pub quad_tol: f64,
    /// Keeps the terminal gradient level at least this far below a finite
    /// `θ↑`. Zero solves the exact problem.
    pub gradient_margin: f64,
    /// Interior sample count of the optimality check.
    pub optimality_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            root_xtol: 1e-14,
            level_floor: 1e-12,
            bracket_limit: 2f64.powi(60),
            jump_tol: 1e-8,
            prefix_tol: 1e-6,
            flat_tol: 1e-9,
            outer_scan: 24,
            transition_tol: 1e-4,
            quad_tol: 1e-11,
            gradient_margin: 0.0,
            optimality_samples: 1000,
        }
    }
}
