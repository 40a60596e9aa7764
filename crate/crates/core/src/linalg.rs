//! Dense helpers shared by the index computations.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

/// Full singular value decomposition `A = U·diag(s)·Vᵀ`, singular values descending.
pub struct Svd {
    /// `m × m`.
    pub u: DMatrix<f64>,
    /// `min(m, k)` values.
    pub s: Vec<f64>,
    /// `k × k`.
    pub v: DMatrix<f64>,
}

/// Computed with faer: nalgebra's SVD returns wrong factors for some rank-deficient inputs,
/// and rank-deficient inputs (kernels, intersections) are the normal case here.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Svd { u: DMatrix::identity(m, m), s: Vec::new(), v: DMatrix::identity(k, k) };
    }
    let mat = faer::Mat::from_fn(m, k, |i, j| a[(i, j)]);
    let Ok(f) = mat.svd() else {
        // non-finite input; keep the shapes and let the callers' checks reject the result
        let d = a.clone().svd(true, true);
        let mut u = DMatrix::identity(m, m);
        u.columns_mut(0, m.min(k)).copy_from(&d.u.expect("svd u"));
        let mut v = DMatrix::identity(k, k);
        v.columns_mut(0, m.min(k)).copy_from(&d.v_t.expect("svd v").transpose());
        return Svd { u, s: d.singular_values.iter().cloned().collect(), v };
    };
    let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
    Svd {
        u: DMatrix::from_fn(m, m, |i, j| u[(i, j)]),
        s: (0..m.min(k)).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(k, k, |i, j| v[(i, j)]),
    }
}

/// Eigenvalues of a general complex matrix (faer's QR algorithm), unordered.
pub fn complex_eigenvalues(a: &DMatrix<Complex<f64>>) -> Vec<Complex<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mat = faer::Mat::from_fn(n, n, |i, j| a[(i, j)]);
    mat.eigenvalues().unwrap_or_else(|_| vec![Complex::new(f64::NAN, f64::NAN); n])
}

/// Moore–Penrose inverse with singular values `≤ eps` treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let d = svd(a);
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in d.s.iter().enumerate() {
        if s > eps {
            out += d.v.column(i) * d.u.column(i).transpose() / s;
        }
    }
    out
}

/// Orthonormal basis of the column space, rank decided by `σ > rel_tol · (1 + σ_max)`.
pub fn orthonormal_basis(cols: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, k) = cols.shape();
    if k == 0 || m == 0 {
        return DMatrix::zeros(m, 0);
    }
    let d = svd(cols);
    let cut = rel_tol * (1.0 + d.s[0]);
    let rank = d.s.iter().filter(|&&s| s > cut).count();
    d.u.columns(0, rank).into_owned()
}

/// Singular values (descending) of `cols`.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    svd(m).s
}

/// Orthonormal basis of `{v : A v = 0}`, with `σ ≤ tol · (1 + σ_max)` counted as zero.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (m, k) = a.shape();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m == 0 {
        return DMatrix::identity(k, k);
    }
    let d = svd(a);
    let cut = tol * (1.0 + d.s[0]);
    let rank = d.s.iter().filter(|&&s| s > cut).count();
    d.v.columns(rank, k - rank).into_owned()
}

/// Orthonormal basis of `span X ∩ span Y` for orthonormal `X`, `Y`.
///
/// A vector `Xa` lies in `span Y` iff `(I − YYᵀ)Xa = 0`; `tol` bounds the sine of the
/// principal angle accepted as zero.
pub fn subspace_intersection(x: &DMatrix<f64>, y: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let m = x.nrows();
    if x.ncols() == 0 || y.ncols() == 0 {
        return DMatrix::zeros(m, 0);
    }
    let resid = x - y * (y.transpose() * x);
    let d = svd(&resid);
    // columns of V past the singular values belong to σ = 0
    let cols: Vec<_> =
        (0..x.ncols()).filter(|&i| d.s.get(i).map_or(true, |&s| s <= tol)).map(|i| x * d.v.column(i)).collect();
    if cols.is_empty() {
        return DMatrix::zeros(m, 0);
    }
    orthonormal_basis(&DMatrix::from_columns(&cols), 1e-12)
}

/// Sines of the principal angles between equal-dimensional orthonormal frames, ascending.
pub fn principal_sines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let resid = b - a * (a.transpose() * b);
    let mut s = singular_values(&resid);
    while s.len() < b.ncols() {
        s.push(0.0);
    }
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s
}

/// Eigenvalues of the symmetric part of `s`, ascending.
pub fn sym_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    if s.nrows() == 0 {
        return Vec::new();
    }
    let sym = (s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Symmetric part of a square matrix.
pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Block-diagonal matrix `a ⊕ b`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
    }

    #[test]
    fn intersection_of_planes_in_r3() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let y = orthonormal_basis(&DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]), 1e-12);
        let i = subspace_intersection(&x, &y, 1e-10);
        assert_eq!(i.ncols(), 1);
        assert!((i[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_dependent_columns() {
        let c = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(orthonormal_basis(&c, 1e-12).ncols(), 1);
    }
}
