//! Discontinuous Galerkin time stepping with weighted Radau quadrature.

mod mesh;
mod problem;
mod solution;
mod solver;

pub use mesh::{LagrangeData, TimeMesh};
pub use problem::{identity, ExactSolution, Problem, Side, Source, SpaceFn, SpaceTimeField, SpaceTimeFn, ZeroField};
pub use solution::DiscreteSolution;
pub use solver::{
    history_rhs, local_blocks, solve, HistoryQuadrature, LocalBlocks, SolveDiagnostics, SolverOptions,
    SourceEvaluation,
};

use thiserror::Error;

use crate::kernel::KernelError;
use crate::quadrature::QuadratureError;
use crate::space_fem::FeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DgError {
    #[error("invalid time mesh: {0}")]
    Mesh(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Space(#[from] FeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("local system of interval {interval} is singular (q = {q}, k = {k}, zero pivot in column {column})")]
    Singular { interval: usize, q: usize, k: usize, column: usize },
    #[error("time {0} lies outside the simulation window")]
    OutOfRange(f64),
}
