//! Most-likely paths and rate functions for the area under a reflected
//! random walk, with a dynamic-programming cross-check and a Monte Carlo
//! engine.

pub mod config;
pub mod dp_oracle;
pub mod export;
pub mod extended;
pub mod increments;
pub mod mc_engine;
pub mod mlp_solver;
pub mod numerics;

pub use config::SolverConfig;
pub use extended::Extended;
pub use increments::{Family, IncrementModel, ModelError, ModelSpec};
