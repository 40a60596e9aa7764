//! Triple index `ι(α, β, γ)` and Hörmander index `s(λ₁, λ₂; μ₁, μ₂)`.

use nalgebra::DMatrix;

use super::MaslovError;
use crate::linalg::{self, max_abs};
use crate::symplectic::{intersection_dim, InertiaTriple, LagrangianFrame};

const SUBSPACE_TOL: f64 = 1e-9;

/// The form `Q(u) = ω(u, Cu)` on `α ∩ (β + γ)`, where `Cu ∈ β` and `u + Cu ∈ γ`.
///
/// Returns an orthonormal basis of `α ∩ (β + γ)` and the symmetric matrix of `Q` in it.
pub fn triple_q_form(
    alpha: &LagrangianFrame,
    beta: &LagrangianFrame,
    gamma: &LagrangianFrame,
) -> Result<(DMatrix<f64>, DMatrix<f64>), MaslovError> {
    let space = alpha.space();
    if beta.space() != space || gamma.space() != space {
        return Err(MaslovError::SpaceMismatch);
    }
    let d = space.dim();
    let n = space.half_dim();
    let (a, b, g) = (alpha.frame(), beta.frame(), gamma.frame());

    let mut bg = DMatrix::zeros(d, 2 * n);
    bg.view_mut((0, 0), (d, n)).copy_from(b);
    bg.view_mut((0, n), (d, n)).copy_from(g);
    let sum = linalg::orthonormal_basis(&bg, SUBSPACE_TOL);
    let off_sum = a - &sum * (sum.transpose() * a);
    let coeffs = linalg::null_space(&off_sum, SUBSPACE_TOL);
    let u = a * coeffs;
    let k = u.ncols();
    if k == 0 {
        return Ok((u, DMatrix::zeros(0, 0)));
    }

    // Bb − Gg = −u, least-squares minimum norm; any solution gives the same form
    let mut system = bg.clone();
    system.view_mut((0, n), (d, n)).scale_mut(-1.0);
    let sol = linalg::pseudo_inverse(&system, SUBSPACE_TOL) * (-&u);
    let c = b * sol.rows(0, n);
    let q = u.transpose() * space.j() * c;
    Ok((u, linalg::symmetrize(&q)))
}

/// `ι(α, β, γ) = n₊(Q(α, β; γ)) + dim(α ∩ γ) − dim(α ∩ β ∩ γ)`.
pub fn triple_index(
    alpha: &LagrangianFrame,
    beta: &LagrangianFrame,
    gamma: &LagrangianFrame,
) -> Result<usize, MaslovError> {
    let (_, q) = triple_q_form(alpha, beta, gamma)?;
    let floor = SUBSPACE_TOL * (1.0 + max_abs(&q));
    let n_plus = InertiaTriple::of_symmetric(&q, floor).n_plus;
    let ag = intersection_dim(alpha, gamma, SUBSPACE_TOL)?;
    let ab = linalg::subspace_intersection(alpha.frame(), beta.frame(), SUBSPACE_TOL);
    let abg = linalg::subspace_intersection(&ab, gamma.frame(), SUBSPACE_TOL).ncols();
    Ok(n_plus + ag - abg)
}

/// `s(λ₁, λ₂; μ₁, μ₂) = ι(λ₁, λ₂, μ₂) − ι(λ₁, λ₂, μ₁)`.
pub fn hormander_index(
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    m1: &LagrangianFrame,
    m2: &LagrangianFrame,
) -> Result<i64, MaslovError> {
    Ok(triple_index(l1, l2, m2)? as i64 - triple_index(l1, l2, m1)? as i64)
}
