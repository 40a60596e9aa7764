//! Sturm–Liouville operators: fundamental solutions, conjugate points, Morse indices and traces.

pub mod catalog;
mod classify;
mod integrate;
mod morse;
mod problem;
mod trace;

use thiserror::Error;

use crate::maslov::MaslovError;
use crate::symplectic::SymplecticError;

pub use catalog::{catalog_names, describe, parse_catalog};
pub use classify::{endpoint_classify, EndpointClass};
pub use integrate::{fundamental_solution, FundamentalSolution, IntegratorOptions};
pub use morse::{
    boundary_lagrangians, conjugate_points, morse_index_dirichlet, morse_index_dirichlet_with, morse_index_general,
    morse_index_general_with, BoundaryCondition, ConjugatePoint, SturmOptions, DEFAULT_SCHEDULE,
};
pub use problem::{
    to_hamiltonian, Builtin, CatalogEntry, Coefficients, Endpoint, EndpointKind, GridSampled, Polynomial, SlProblem,
};
pub use trace::{boundary_bracket, trace_map, BoundaryData, EndTrace, PhaseFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlError {
    #[error("leading coefficient is not invertible at t = {0}")]
    CoefficientSingular(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("symplectic drift {0:.3e} exceeds the budget")]
    DriftBudgetExceeded(f64),
    #[error("conjugate points are not isolated")]
    NonIsolatedCrossing,
    #[error("crossing at t = {0} is not positive definite")]
    CrossingNotPositive(f64),
    #[error("delta schedule needs at least 4 values, got {0}")]
    ScheduleTooShort(usize),
    #[error("no kernel basis available: {0}")]
    KernelBasisUnavailable(String),
    #[error("boundary bracket limit does not settle (last increment {0:.3e})")]
    BracketLimitDiverges(f64),
    #[error("limit-point end carries no boundary condition")]
    LimitPointEnd,
    #[error("invalid span [{0}, {1}]")]
    InvalidSpan(f64, f64),
    #[error("coefficients: {0}")]
    Coefficients(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
    #[error("endpoint classification is inconclusive: {0}")]
    Inconclusive(String),
    #[error("kernel selection failed: Gram matrix has rank {0}")]
    SelectionFailed(usize),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Maslov(#[from] MaslovError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}
