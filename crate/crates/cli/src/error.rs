use std::process::ExitCode;

use rrw_core::dp_oracle::DpError;
use rrw_core::mc_engine::SimError;
use rrw_core::mlp_solver::SolveError;
use rrw_core::increments::ModelJsonError;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Infeasible,
    NonConvergence,
}

impl Kind {
    fn code(self) -> u8 {
        match self {
            Kind::Config => 1,
            Kind::Infeasible => 2,
            Kind::NonConvergence => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Config => "config",
            Kind::Infeasible => "infeasible",
            Kind::NonConvergence => "non_convergence",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Config, message: message.into() }
    }

    /// Prints one JSON line on stderr and returns the exit code.
    pub fn report(&self) -> ExitCode {
        let line = json!({ "error": self.kind.name(), "code": self.kind.code(), "message": self.message.trim() });
        eprintln!("{line}");
        ExitCode::from(self.kind.code())
    }
}

impl From<ModelJsonError> for CliError {
    fn from(e: ModelJsonError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        let kind = match e {
            SolveError::InvalidTarget { .. } => Kind::Config,
            SolveError::Infeasible { .. } => Kind::Infeasible,
            SolveError::NonConvergence { .. } | SolveError::NoCandidate { .. } => Kind::NonConvergence,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        match e {
            DpError::Analytic(inner) => inner.into(),
            DpError::InfeasibleArea { .. } => CliError { kind: Kind::Infeasible, message: e.to_string() },
            DpError::InvalidGrid(_) => CliError::config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("i/o error: {e}"))
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::config(format!("{e:#}"))
    }
}
