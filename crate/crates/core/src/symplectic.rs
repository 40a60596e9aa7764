//! Symplectic linear algebra on `(ℝ^{2n}, Ω)` and on boundary spaces `(ℝ^{2l} ⊕ ℝ^{2r}, −Ω ⊕ Ω)`.
//!
//! Every block stores coordinates as `(p, x)`: quasi-derivative first, position second,
//! so `Ω((p,x),(p',x')) = ⟨p,x'⟩ − ⟨x,p'⟩` and `J = [[0, I], [−I, 0]]`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, max_abs, orthonormal_basis};

/// Tolerance for rank and isotropy decisions on orthonormal frames.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("span is not isotropic (largest pairing {0:.3e})")]
    NotIsotropic(f64),
    #[error("rank {rank} is below the half dimension {half_dim}")]
    RankDeficient { rank: usize, half_dim: usize },
    #[error("operands live in different symplectic spaces")]
    SpaceMismatch,
    #[error("matrix is not symplectic (residual {0:.3e})")]
    NotSymplectic(f64),
    #[error("expected {expected} rows, got {got}")]
    Shape { expected: usize, got: usize },
}

/// The symplectic form carried by a coordinate space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    /// `(ℝ^{2n}, Ω)`.
    Standard(usize),
    /// `(ℝ^{2l} ⊕ ℝ^{2r}, −Ω ⊕ Ω)`, left block first.
    MinusPlus(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymplecticSpace {
    form: Form,
}

impl SymplecticSpace {
    pub fn standard(n: usize) -> Self {
        assert!(n > 0, "half dimension must be positive");
        Self { form: Form::Standard(n) }
    }

    /// Boundary-data space with a `−Ω` block of half dimension `left` and an `Ω` block of `right`.
    pub fn boundary(left: usize, right: usize) -> Self {
        assert!(left + right > 0, "half dimension must be positive");
        Self { form: Form::MinusPlus(left, right) }
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn half_dim(&self) -> usize {
        match self.form {
            Form::Standard(n) => n,
            Form::MinusPlus(l, r) => l + r,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    /// `(p index, x index, sign)` for every canonical pair; `sign` is −1 inside a `−Ω` block.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        match self.form {
            Form::Standard(n) => (0..n).map(|i| (i, n + i, 1.0)).collect(),
            Form::MinusPlus(l, r) => {
                let mut v: Vec<_> = (0..l).map(|i| (i, l + i, -1.0)).collect();
                v.extend((0..r).map(|i| (2 * l + i, 2 * l + r + i, 1.0)));
                v
            }
        }
    }

    /// Matrix of the form: `ω(u, v) = uᵀ J v`.
    pub fn j(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for (p, x, s) in self.pairs() {
            j[(p, x)] = s;
            j[(x, p)] = -s;
        }
        j
    }

    pub fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.pairs().iter().map(|&(p, x, s)| s * (u[p] * v[x] - u[x] * v[p])).sum()
    }

    /// `Λ_D`: vanishing positions in every block.
    pub fn dirichlet(&self) -> LagrangianFrame {
        let mut f = DMatrix::zeros(self.dim(), self.half_dim());
        for (k, (p, _, _)) in self.pairs().into_iter().enumerate() {
            f[(p, k)] = 1.0;
        }
        LagrangianFrame { space: *self, frame: f }
    }

    /// `Λ_N`: vanishing quasi-derivatives in every block.
    pub fn neumann(&self) -> LagrangianFrame {
        let mut f = DMatrix::zeros(self.dim(), self.half_dim());
        for (k, (_, x, _)) in self.pairs().into_iter().enumerate() {
            f[(x, k)] = 1.0;
        }
        LagrangianFrame { space: *self, frame: f }
    }

    /// `e^{θJ} = cos θ I + sin θ J`, an orthogonal symplectic rotation.
    pub fn rotation(&self, theta: f64) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) * theta.cos() + self.j() * theta.sin()
    }
}

/// Signs of a real symmetric form: `(n₊, n₀, n₋)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
}

impl InertiaTriple {
    /// Inertia of the symmetric part of `s`; eigenvalues with `|λ| ≤ floor` count as zero.
    pub fn of_symmetric(s: &DMatrix<f64>, floor: f64) -> Self {
        let mut t = Self::default();
        for ev in linalg::sym_eigenvalues(s) {
            if ev > floor {
                t.n_plus += 1;
            } else if ev < -floor {
                t.n_minus += 1;
            } else {
                t.n_zero += 1;
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_zero + self.n_minus
    }

    pub fn signature(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }
}

/// A Lagrangian subspace stored as an orthonormal `dim × half_dim` frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame {
    space: SymplecticSpace,
    frame: DMatrix<f64>,
}

impl LagrangianFrame {
    /// Default-tolerance shorthand for [`lagrangian_from_columns`].
    pub fn new(space: SymplecticSpace, columns: DMatrix<f64>) -> Result<Self, SymplecticError> {
        lagrangian_from_columns(space, &columns, DEFAULT_TOL)
    }

    /// Orthonormalizes without checking isotropy; for frames produced by trusted flows.
    pub fn orthonormalized(space: SymplecticSpace, columns: &DMatrix<f64>) -> Self {
        let q = orthonormal_basis(columns, 1e-13);
        debug_assert_eq!(q.ncols(), space.half_dim(), "rank-deficient trusted frame");
        Self { space, frame: q }
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Largest entry of `FᵀJF`.
    pub fn isotropy_defect(&self) -> f64 {
        max_abs(&(self.frame.transpose() * self.space.j() * &self.frame))
    }

    /// Frame of `M·L`.
    pub fn transform(&self, m: &DMatrix<f64>) -> Self {
        Self::orthonormalized(self.space, &(m * &self.frame))
    }

    /// `self ⊕ other` inside the boundary space `−Ω ⊕ Ω`; `self` becomes the `−Ω` block.
    ///
    /// Lagrangians of `Ω` are Lagrangians of `−Ω`, so both operands may be standard frames.
    pub fn direct_sum(&self, other: &LagrangianFrame) -> Self {
        let l = self.space.half_dim();
        let r = other.space.half_dim();
        let space = SymplecticSpace::boundary(l, r);
        let frame = linalg::block_diag(&self.frame, &other.frame);
        Self { space, frame }
    }

    /// `U = X + iY` with `X` the sign-corrected quasi-derivative rows and `Y` the positions.
    ///
    /// `U` is unitary, and `U Uᵀ` depends only on the subspace.
    pub fn complexify(&self) -> DMatrix<Complex<f64>> {
        let pairs = self.space.pairs();
        let n = pairs.len();
        DMatrix::from_fn(n, n, |i, j| {
            let (p, x, s) = pairs[i];
            Complex::new(s * self.frame[(p, j)], self.frame[(x, j)])
        })
    }

    /// Inverse of [`complexify`](Self::complexify) for a unitary `U`.
    pub fn from_unitary(space: SymplecticSpace, u: &DMatrix<Complex<f64>>) -> Self {
        let pairs = space.pairs();
        let n = pairs.len();
        let mut f = DMatrix::zeros(2 * n, n);
        for (i, &(p, x, s)) in pairs.iter().enumerate() {
            for j in 0..n {
                f[(p, j)] = s * u[(i, j)].re;
                f[(x, j)] = u[(i, j)].im;
            }
        }
        Self::orthonormalized(space, &f)
    }

    /// Whether `v` lies in the subspace, relative to `|v|`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        let r = v - &self.frame * (self.frame.transpose() * v);
        r.norm() <= tol * (1.0 + v.norm())
    }
}

/// Canonicalizes `columns` into an orthonormal Lagrangian frame.
pub fn lagrangian_from_columns(
    space: SymplecticSpace,
    columns: &DMatrix<f64>,
    tol: f64,
) -> Result<LagrangianFrame, SymplecticError> {
    if columns.nrows() != space.dim() {
        return Err(SymplecticError::Shape { expected: space.dim(), got: columns.nrows() });
    }
    let sv = linalg::singular_values(columns);
    let smax = sv.first().cloned().unwrap_or(0.0);
    let q = orthonormal_basis(columns, tol);
    let smin = sv.get(q.ncols().saturating_sub(1)).cloned().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { 1.0 };
    let defect = max_abs(&(q.transpose() * space.j() * &q));
    if defect > tol * (1.0 + cond) {
        return Err(SymplecticError::NotIsotropic(defect));
    }
    if q.ncols() < space.half_dim() {
        return Err(SymplecticError::RankDeficient { rank: q.ncols(), half_dim: space.half_dim() });
    }
    Ok(LagrangianFrame { space, frame: q })
}

/// `dim(span A ∩ span B)`, counting principal angles whose sine is at most `tol`.
pub fn intersection_dim(a: &LagrangianFrame, b: &LagrangianFrame, tol: f64) -> Result<usize, SymplecticError> {
    if a.space != b.space {
        return Err(SymplecticError::SpaceMismatch);
    }
    Ok(linalg::principal_sines(&a.frame, &b.frame).iter().filter(|&&s| s <= tol).count())
}

/// Orthonormal basis of `span A ∩ span B`.
pub fn intersection_basis(a: &LagrangianFrame, b: &LagrangianFrame, tol: f64) -> DMatrix<f64> {
    linalg::subspace_intersection(&a.frame, &b.frame, tol)
}

/// `‖MᵀJM − J‖` in the max-entry norm.
pub fn symplectic_residual_in(space: &SymplecticSpace, m: &DMatrix<f64>) -> f64 {
    let j = space.j();
    max_abs(&(m.transpose() * &j * m - j))
}

/// A real `2n × 2n` matrix preserving the form of its space.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    space: SymplecticSpace,
    entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Accepts `m` when `‖MᵀJM − J‖ ≤ tol · max(1, ‖M‖²)`.
    pub fn new(space: SymplecticSpace, m: DMatrix<f64>, tol: f64) -> Result<Self, SymplecticError> {
        if m.nrows() != space.dim() || m.ncols() != space.dim() {
            return Err(SymplecticError::Shape { expected: space.dim(), got: m.nrows() });
        }
        let res = symplectic_residual_in(&space, &m);
        let scale = max_abs(&m).powi(2).max(1.0);
        if res > tol * scale {
            return Err(SymplecticError::NotSymplectic(res));
        }
        Ok(Self { space, entries: m })
    }

    pub fn new_unchecked(space: SymplecticSpace, m: DMatrix<f64>) -> Self {
        Self { space, entries: m }
    }

    pub fn identity(space: SymplecticSpace) -> Self {
        Self { space, entries: DMatrix::identity(space.dim(), space.dim()) }
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(self)
    }

    /// `M⁻¹ = J⁻¹ Mᵀ J`.
    pub fn inverse(&self) -> Self {
        let j = self.space.j();
        Self { space: self.space, entries: -(&j * self.entries.transpose() * &j) }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { space: self.space, entries: &self.entries * &other.entries }
    }

    pub fn apply(&self, l: &LagrangianFrame) -> LagrangianFrame {
        l.transform(&self.entries)
    }
}

/// `‖MᵀJM − J‖` in the max-entry norm.
pub fn symplectic_residual(m: &SymplecticMatrix) -> f64 {
    symplectic_residual_in(&m.space, &m.entries)
}

/// Frame of `{(v, Mv)}` in `(ℝ^{2n} ⊕ ℝ^{2n}, −Ω ⊕ Ω)`.
pub fn graph_lagrangian(m: &SymplecticMatrix, tol: f64) -> Result<LagrangianFrame, SymplecticError> {
    let n = match m.space.form {
        Form::Standard(n) => n,
        Form::MinusPlus(..) => return Err(SymplecticError::SpaceMismatch),
    };
    let res = m.residual();
    if res > tol * max_abs(&m.entries).powi(2).max(1.0) {
        return Err(SymplecticError::NotSymplectic(res));
    }
    let d = 2 * n;
    let mut cols = DMatrix::zeros(2 * d, d);
    cols.view_mut((0, 0), (d, d)).fill_with_identity();
    cols.view_mut((d, 0), (d, d)).copy_from(&m.entries);
    Ok(LagrangianFrame::orthonormalized(SymplecticSpace::boundary(n, n), &cols))
}

/// Nearest-symplectic correction `Φ ← Φ(I + ½(I + JE))`, `E = ΦᵀJΦ`, iterated to `tol`.
///
/// First-order in the defect, so a few sweeps reach rounding level.
pub fn symplectic_correction(space: &SymplecticSpace, phi: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let j = space.j();
    let d = space.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let mut out = phi.clone();
    for _ in 0..6 {
        let e = out.transpose() * &j * &out;
        if max_abs(&(&e - &j)) <= tol {
            break;
        }
        let x = (&id + &j * &e) * 0.5;
        out = &out * (&id + x);
    }
    out
}

/// Cayley transform `(I − JS/2)⁻¹(I + JS/2)` of a symmetric `S`: an exact symplectic matrix.
pub fn cayley(space: &SymplecticSpace, s: &DMatrix<f64>) -> DMatrix<f64> {
    let d = space.dim();
    let js = space.j() * linalg::symmetrize(s) * 0.5;
    let id = DMatrix::<f64>::identity(d, d);
    let lhs = &id - &js;
    lhs.lu().solve(&(&id + &js)).expect("Cayley transform of a symmetric matrix is regular")
}
