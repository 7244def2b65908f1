//! Brute-force check of the variational solver: exhaustive dynamic
//! programming over a `(time, height, area bin)` lattice.
//!
//! A lattice path moves between heights `j·Δh` at times `i·Δt`. Each
//! transition costs `I(slope)·duration`, except resting at height zero,
//! which is free. Transitions may span up to `max_span` time steps (only
//! coprime height/duration pairs, so each slope is generated once), which
//! refines the slope set without refining the lattice. Every state keeps
//! the exact trapezoidal area of its cheapest path in integer units of
//! `Δh·Δt/2`; the area bin only decides which states are merged.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::SolverConfig;
use crate::extended::Extended;
use crate::increments::IncrementModel;
use crate::mlp_solver::{solve_path_with, SolveError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no lattice path reaches the area bin of z = {z}")]
    InfeasibleArea { z: f64 },
    #[error("analytic solver failed: {0}")]
    Analytic(#[from] SolveError),
}

/// Lattice dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpGrid {
    pub n_t: usize,
    pub n_h: usize,
    pub n_a: usize,
    pub h_max: f64,
    pub a_max: f64,
    /// Longest transition, in time steps.
    pub max_span: usize,
}

const MAX_SPAN: usize = 7;
const SPAN_BITS: u32 = 3;
const HEIGHT_BITS: u32 = 13;
const BIN_BITS: u32 = 16;
/// Default longest transition.
pub const DEFAULT_SPAN: usize = 4;

impl DpGrid {
    pub fn new(n_t: usize, n_h: usize, n_a: usize, h_max: f64, a_max: f64) -> Result<Self, DpError> {
        let g = DpGrid { n_t, n_h, n_a, h_max, a_max, max_span: DEFAULT_SPAN };
        g.validate()?;
        Ok(g)
    }

    /// Conventional box for target `z`: `h_max = 3(z + δ)`, `a_max = 1.2 z`.
    pub fn standard(model: &IncrementModel, z: f64, n_t: usize, n_h: usize, n_a: usize) -> Result<Self, DpError> {
        Self::new(n_t, n_h, n_a, 3.0 * (z + model.delta()), 1.2 * z.max(1e-9))
    }

    pub fn with_span(mut self, max_span: usize) -> Result<Self, DpError> {
        self.max_span = max_span;
        self.validate()?;
        Ok(self)
    }

    pub fn with_h_max(mut self, h_max: f64) -> Result<Self, DpError> {
        self.h_max = h_max;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), DpError> {
        let bad = |m: &str| Err(DpError::InvalidGrid(m.to_string()));
        if self.n_t < 8 || self.n_h < 8 || self.n_a < 8 {
            return bad("all counts must be at least 8");
        }
        if self.n_h >= 1 << HEIGHT_BITS || self.n_a > 1 << BIN_BITS {
            return bad("grid too large for packed back-pointers");
        }
        if self.max_span == 0 || self.max_span > MAX_SPAN {
            return bad("max_span must lie in 1..=7");
        }
        if !(self.h_max > 0.0 && self.h_max.is_finite() && self.a_max > 0.0 && self.a_max.is_finite()) {
            return bad("h_max and a_max must be positive");
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_t as f64
    }

    pub fn dh(&self) -> f64 {
        self.h_max / self.n_h as f64
    }

    /// Width of one area bin.
    pub fn da(&self) -> f64 {
        self.a_max / (self.n_a - 1) as f64
    }

    /// Smallest single-step slope increment `Δh/Δt`.
    pub fn slope_quantum(&self) -> f64 {
        self.dh() / self.dt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpSolution {
    pub cost: f64,
    /// Height at each of the `n_t + 1` lattice times.
    pub path: Vec<f64>,
    /// Exact trapezoidal area of `path`.
    pub area: f64,
    pub grid: DpGrid,
}

impl DpSolution {
    pub fn peak(&self) -> f64 {
        self.path.iter().copied().fold(0.0, f64::max)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn pack(span: usize, j: usize, b: usize) -> u32 {
    ((span as u32) << (HEIGHT_BITS + BIN_BITS)) | ((j as u32) << BIN_BITS) | b as u32
}

fn unpack(p: u32) -> (usize, usize, usize) {
    let b = (p & ((1 << BIN_BITS) - 1)) as usize;
    let j = ((p >> BIN_BITS) & ((1 << HEIGHT_BITS) - 1)) as usize;
    let span = (p >> (HEIGHT_BITS + BIN_BITS)) as usize;
    debug_assert!(span < 1 << SPAN_BITS);
    (span, j, b)
}

/// One time layer: per height row, per area bin, best cost and its area.
#[derive(Clone)]
struct Layer {
    cost: Vec<f64>,
    area: Vec<u32>,
    /// Occupied bin range per row (`lo > hi` when empty).
    occupied: Vec<(usize, usize)>,
}

impl Layer {
    fn empty(rows: usize, bins: usize) -> Self {
        Layer {
            cost: vec![f64::INFINITY; rows * bins],
            area: vec![0; rows * bins],
            occupied: vec![(1, 0); rows],
        }
    }
}

struct Row {
    cost: Vec<f64>,
    area: Vec<u32>,
    back: Vec<u32>,
    occupied: (usize, usize),
}

/// Minimal lattice cost of a path with area in the bin of `z`.
pub fn dp_solve(model: &IncrementModel, z: f64, grid: &DpGrid) -> Result<DpSolution, DpError> {
    grid.validate()?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(DpError::InfeasibleArea { z });
    }
    let (n_t, n_h, n_a) = (grid.n_t, grid.n_h, grid.n_a);
    let rows = n_h + 1;
    let (dt, dh, da) = (grid.dt(), grid.dh(), grid.da());
    let unit = 0.5 * dh * dt;
    let target_bin = (z / da).round() as usize;
    if target_bin >= n_a {
        return Err(DpError::InfeasibleArea { z });
    }
    // exact area (in units) → bin; areas past the last bin are dropped
    let max_units = (((n_a as f64 - 0.5) * da) / unit).floor() as usize;
    let max_units = max_units.min(u32::MAX as usize / 2);
    let bin_of: Vec<u16> = (0..=max_units)
        .map(|u| ((u as f64 * unit / da).round() as usize).min(n_a - 1) as u16)
        .collect();

    let span_max = grid.max_span.min(n_t);
    // transition cost by span and height difference (offset by n_h)
    let table: Vec<Vec<f64>> = (1..=span_max)
        .map(|m| {
            (0..2 * n_h + 1)
                .map(|idx| {
                    let d = idx as isize - n_h as isize;
                    if m > 1 && gcd(d.unsigned_abs(), m) != 1 {
                        return f64::INFINITY;
                    }
                    let slope = d as f64 * dh / (m as f64 * dt);
                    match model.rate(slope) {
                        Extended::Finite(c) => c * m as f64 * dt,
                        Extended::PosInf => f64::INFINITY,
                    }
                })
                .collect()
        })
        .collect();

    let mut ring: Vec<Layer> = vec![Layer::empty(rows, n_a); span_max + 1];
    ring[0].cost[0] = 0.0;
    ring[0].occupied[0] = (0, 0);
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(n_t + 1);
    back.push(Vec::new());

    for i in 1..=n_t {
        let sources: Vec<&Layer> = (1..=span_max.min(i)).map(|m| &ring[(i - m) % (span_max + 1)]).collect();
        let new_rows: Vec<Row> = (0..rows)
            .into_par_iter()
            .map(|k| relax_row(k, &sources, &table, &bin_of, n_h, n_a))
            .collect();
        let slot = i % (span_max + 1);
        let layer = &mut ring[slot];
        let mut bp = vec![0u32; rows * n_a];
        for (k, row) in new_rows.into_iter().enumerate() {
            layer.cost[k * n_a..(k + 1) * n_a].copy_from_slice(&row.cost);
            layer.area[k * n_a..(k + 1) * n_a].copy_from_slice(&row.area);
            bp[k * n_a..(k + 1) * n_a].copy_from_slice(&row.back);
            layer.occupied[k] = row.occupied;
        }
        back.push(bp);
    }

    let last = &ring[n_t % (span_max + 1)];
    let mut best: Option<(f64, usize)> = None;
    for k in 0..rows {
        let c = last.cost[k * n_a + target_bin];
        if c.is_finite() && best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, k));
        }
    }
    let Some((cost, k_end)) = best else {
        return Err(DpError::InfeasibleArea { z });
    };

    // walk the back-pointers, interpolating across multi-step transitions
    let mut heights = vec![0.0; n_t + 1];
    let (mut i, mut k, mut b) = (n_t, k_end, target_bin);
    while i > 0 {
        let (m, j, b_src) = unpack(back[i][k * n_a + b]);
        for step in 0..m {
            let frac = step as f64 / m as f64;
            heights[i - step] = dh * (k as f64 + (j as f64 - k as f64) * frac);
        }
        i -= m;
        k = j;
        b = b_src;
    }
    let area = dt * heights.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>();
    Ok(DpSolution { cost, path: heights, area, grid: *grid })
}

fn relax_row(k: usize, sources: &[&Layer], table: &[Vec<f64>], bin_of: &[u16], n_h: usize, n_a: usize) -> Row {
    let mut cost = vec![f64::INFINITY; n_a];
    let mut area = vec![0u32; n_a];
    let mut back = vec![0u32; n_a];
    let max_units = (bin_of.len() - 1) as u32;
    for (mi, src) in sources.iter().enumerate() {
        let m = mi + 1;
        for j in 0..=n_h {
            let (lo, hi) = src.occupied[j];
            if lo > hi {
                continue;
            }
            let c = if m == 1 && j == 0 && k == 0 { 0.0 } else { table[mi][k + n_h - j] };
            if !c.is_finite() {
                continue;
            }
            let inc = ((j + k) * m) as u32;
            let base = j * n_a;
            let src_cost = &src.cost[base + lo..=base + hi];
            let src_area = &src.area[base + lo..=base + hi];
            for (off, (&cs, &a)) in src_cost.iter().zip(src_area).enumerate() {
                if cs == f64::INFINITY {
                    continue;
                }
                let na = a + inc;
                if na > max_units {
                    break;
                }
                let nb = bin_of[na as usize] as usize;
                let nc = cs + c;
                if nc < cost[nb] {
                    cost[nb] = nc;
                    area[nb] = na;
                    back[nb] = pack(m, j, lo + off);
                }
            }
        }
    }
    let lo = cost.iter().position(|c| c.is_finite());
    let occupied = match lo {
        Some(lo) => (lo, cost.iter().rposition(|c| c.is_finite()).unwrap_or(lo)),
        None => (1, 0),
    };
    Row { cost, area, back, occupied }
}

/// Height box chosen from the lattice's own optimal path: a coarse pilot
/// locates the peak, the full grid is then solved with a little headroom,
/// and the box grows if the path touches its ceiling. For non-coercive
/// rates the single-step slope quantum is kept a divisor of `r̄`.
pub fn dp_solve_fitted(model: &IncrementModel, z: f64, n_t: usize, n_h: usize, n_a: usize) -> Result<DpSolution, DpError> {
    let base = DpGrid::standard(model, z, n_t, n_h, n_a)?;
    if z == 0.0 {
        return dp_solve(model, z, &base);
    }
    let fit = |h: f64| -> f64 {
        match model.r_bar() {
            Extended::Finite(r) if !model.is_coercive() => {
                // q = h·n_t/n_h = r/m for the largest whole m
                let m = ((r * n_h as f64) / (n_t as f64 * h)).floor().max(1.0);
                r * n_h as f64 / (n_t as f64 * m)
            }
            _ => h,
        }
    };
    let pilot_grid = DpGrid::new((n_t / 4).max(8), (n_h / 4).max(8), (n_a / 4).max(8), fit(base.h_max), base.a_max)?;
    let pilot = dp_solve(model, z, &pilot_grid)?;
    let mut h = fit(HEADROOM * pilot.peak() + 2.0 * pilot_grid.dh());
    for _ in 0..8 {
        let sol = dp_solve(model, z, &base.with_h_max(h)?)?;
        if sol.peak() < h - 1.5 * sol.grid.dh() {
            return Ok(sol);
        }
        h = fit(1.5 * h);
    }
    dp_solve(model, z, &base.with_h_max(h)?)
}

const HEADROOM: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub analytic: f64,
    pub dp: f64,
    pub rel_gap: f64,
    pub h_max: f64,
}

/// DP cost on the fitted grid against the analytic rate.
pub fn compare(
    model: &IncrementModel,
    z: f64,
    n_t: usize,
    n_h: usize,
    n_a: usize,
    config: &SolverConfig,
) -> Result<(Comparison, DpSolution), DpError> {
    let analytic = solve_path_with(model, z, config)?.rate_value.to_f64();
    let sol = dp_solve_fitted(model, z, n_t, n_h, n_a)?;
    let rel_gap = (sol.cost - analytic) / analytic.max(1e-12);
    Ok((Comparison { analytic, dp: sol.cost, rel_gap, h_max: sol.grid.h_max }, sol))
}
