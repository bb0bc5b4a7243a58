use std::io;

use thiserror::Error;

/// Errors produced by the mesh, solver, optimizer and study drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid boundary conditions: {0}")]
    InvalidBoundaryConditions(String),

    #[error("system matrix is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("linear solver stopped after {iterations} iterations with relative residual {residual:e}")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("volume target {target} is infeasible: reachable range is [{min}, {max}]")]
    InfeasibleVolume { target: f64, min: f64, max: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
