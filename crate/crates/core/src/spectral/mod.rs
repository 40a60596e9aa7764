//! Discretized operator families: eigenvalue counting, spectral flow, ghost eigenvalues.

mod checks;
mod discrete;
mod flow;

use thiserror::Error;

use crate::maslov::MaslovError;
use crate::sturm::SlError;
use crate::symplectic::SymplecticError;

pub use checks::{
    morse_jump_check, rellich_ghosts, verify_sf_formula, GhostSample, MorseJumpReport, RellichReport, RellichSetup,
    SfReport,
};
pub use discrete::{DenseSymmetric, DiscreteOperator, DEFAULT_GRID};
pub use flow::{eigen_trace, spectral_flow, spectral_flow_with, EigenTrace, FlowCell, FlowOptions, SpectralFlow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid of {0} interior nodes is too coarse (need at least 16)")]
    GridTooCoarse(usize),
    #[error("boundary condition cannot be eliminated: {0}")]
    BcEliminationSingular(String),
    #[error("no spectral gap around 0 near s = {0}")]
    NoSpectralGap(f64),
    #[error("boundary path meets the Friedrichs condition at s = {0}")]
    TransversalityViolated(f64),
    #[error("discretization needs a regular problem; truncate singular ends first")]
    NotRegular,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Sl(#[from] SlError),
    #[error(transparent)]
    Maslov(#[from] MaslovError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

/// A self-adjoint operator known through its eigenvalue counts.
pub trait SpectralCount {
    fn size(&self) -> usize;
    /// Number of eigenvalues strictly below `mu`.
    fn count_below(&self, mu: f64) -> usize;
    /// An upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;

    /// Magnitude below which an eigenvalue counts as kernel.
    fn kernel_tol(&self) -> f64 {
        1e-9 * self.norm_bound().max(1.0)
    }
}
