//! Symplectic intersection indices and Morse indices of Sturm–Liouville operators.
//!
//! The crate computes Maslov (`μ^CLM`), triple and Hörmander indices of Lagrangian paths,
//! conjugate points and Morse indices of regular and one-sided singular Sturm–Liouville
//! problems, spectral flow of discretized operator families, Bessel-type classifications,
//! and Morse-index classifications of asymptotic N-body motions.
//!
//! Coordinates on phase space are `(p, x)` with `p = P x' + Q x` the quasi-derivative.

pub mod bessel;
pub mod cli;
pub mod linalg;
pub mod maslov;
pub mod nbody;
pub mod report;
pub mod spectral;
pub mod sturm;
pub mod symplectic;
