//! Oracles and random generators shared by the integration tests.
//!
//! Everything here is written from first principles and does not call into the library,
//! so the library can be checked against it.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut TestRng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_symmetric(rng: &mut TestRng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = uniform(rng, n, n, scale);
    (&a + a.transpose()) * 0.5
}

pub fn random_hermitian(rng: &mut TestRng, n: usize, scale: f64) -> DMatrix<Complex<f64>> {
    let re = random_symmetric(rng, n, scale);
    let a = uniform(rng, n, n, scale);
    let im = (&a - a.transpose()) * 0.5;
    DMatrix::from_fn(n, n, |i, j| Complex::new(re[(i, j)], im[(i, j)]))
}

/// `exp(iH)` for Hermitian `H`, through its eigendecomposition.
pub fn expi(h: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
    let eig = h.clone().symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| Complex::new(l.cos(), l.sin()));
    &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// `[Re U; Im U]`: the real and imaginary parts of a unitary `U` give the `p` and `x` rows
/// of a Lagrangian frame of the standard form.
pub fn unitary_frame(u: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut f = DMatrix::zeros(2 * n, u.ncols());
    for i in 0..n {
        for j in 0..u.ncols() {
            f[(i, j)] = u[(i, j)].re;
            f[(n + i, j)] = u[(i, j)].im;
        }
    }
    f
}

pub fn random_unitary(rng: &mut TestRng, n: usize) -> DMatrix<Complex<f64>> {
    expi(&random_hermitian(rng, n, PI))
}

pub fn random_lagrangian_frame(rng: &mut TestRng, n: usize) -> DMatrix<f64> {
    unitary_frame(&random_unitary(rng, n))
}

/// The standard form `J` with `ω(u, v) = uᵀJv = ⟨p, x'⟩ − ⟨x, p'⟩` in `(p, x)` coordinates.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `‖FᵀJF‖` for a frame of the standard space.
pub fn isotropy(frame: &DMatrix<f64>) -> f64 {
    let n = frame.nrows() / 2;
    (frame.transpose() * standard_j(n) * frame).norm()
}

/// A product of two symmetric shears and `diag(A, A⁻ᵀ)`, well conditioned by construction.
pub fn random_symplectic(rng: &mut TestRng, n: usize) -> DMatrix<f64> {
    let mut lower = DMatrix::identity(2 * n, 2 * n);
    lower.view_mut((n, 0), (n, n)).copy_from(&random_symmetric(rng, n, 1.0));
    let mut upper = DMatrix::identity(2 * n, 2 * n);
    upper.view_mut((0, n), (n, n)).copy_from(&random_symmetric(rng, n, 1.0));
    let a = DMatrix::identity(n, n) + uniform(rng, n, n, 0.3);
    let a_inv_t = a.clone().try_inverse().expect("near-identity matrix").transpose();
    let mut diag = DMatrix::zeros(2 * n, 2 * n);
    diag.view_mut((0, 0), (n, n)).copy_from(&a);
    diag.view_mut((n, n), (n, n)).copy_from(&a_inv_t);
    lower * upper * diag
}

/// Frame of `⊕ᵢ span(cos θᵢ, sin θᵢ)`, pair `i` living in coordinates `(pᵢ, xᵢ)`.
pub fn lines_frame(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    let mut f = DMatrix::zeros(2 * n, n);
    for (i, th) in angles.iter().enumerate() {
        f[(i, i)] = th.cos();
        f[(n + i, i)] = th.sin();
    }
    f
}

/// Two angles name the same line when they agree modulo π.
pub fn same_line(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(PI);
    d < 1e-12 || PI - d < 1e-12
}

/// Net count of passages of the angle through `φ` (mod π) between generic endpoints.
pub fn winding(phi: f64, theta_a: f64, theta_b: f64) -> i64 {
    ((theta_b - phi) / PI).floor() as i64 - ((theta_a - phi) / PI).floor() as i64
}

/// Triple index of three lines in the plane.
///
/// For distinct lines, `α ⊂ β + γ` and `u = g − Cu` with `g ∈ γ`, `Cu ∈ β` gives
/// `Q(u) = sin(b−a)·sin(c−a)/sin(b−c)` on the unit vector of `α`.
pub fn line_triple_index(a: f64, b: f64, c: f64) -> usize {
    let (ab, ac, bc) = (same_line(a, b), same_line(a, c), same_line(b, c));
    let positive = !ab && !ac && !bc && (b - a).sin() * (c - a).sin() / (b - c).sin() > 0.0;
    positive as usize + ac as usize - (ab && ac) as usize
}

/// Angles drawn from a small set, so that coincidences (non-generic configurations) are common.
pub fn coarse_angles(rng: &mut TestRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..6) as f64 * PI / 6.0).collect()
}

pub fn coincidences(a: &[f64], b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| same_line(**x, **y)).count()
}

/// A symplectic `M` with known `dim ker(M − I)`, conjugated by a random symplectic matrix.
///
/// Each coordinate pair gets the identity (2), a shear (1), a rotation or a hyperbolic block (0).
pub fn fixed_space_matrix(rng: &mut TestRng, n: usize) -> (DMatrix<f64>, usize) {
    let mut m0 = DMatrix::identity(2 * n, 2 * n);
    let mut kernel = 0;
    for i in 0..n {
        let (p, x) = (i, n + i);
        let block: [[f64; 2]; 2] = match rng.random_range(0..4) {
            0 => {
                kernel += 2;
                [[1.0, 0.0], [0.0, 1.0]]
            }
            1 => {
                kernel += 1;
                let c = rng.random_range(0.5..2.0);
                [[1.0, 0.0], [c, 1.0]]
            }
            2 => {
                let th: f64 = rng.random_range(0.3..2.8);
                [[th.cos(), -th.sin()], [th.sin(), th.cos()]]
            }
            _ => {
                let e = rng.random_range(0.3..1.5f64).exp();
                [[e, 0.0], [0.0, 1.0 / e]]
            }
        };
        m0[(p, p)] = block[0][0];
        m0[(p, x)] = block[0][1];
        m0[(x, p)] = block[1][0];
        m0[(x, x)] = block[1][1];
    }
    let p = random_symplectic(rng, n);
    let p_inv = p.clone().try_inverse().expect("symplectic matrices are invertible");
    (&p * m0 * p_inv, kernel)
}

/// `{(z, z)}` in the doubled space, rows `[z; z]`.
pub fn diagonal_frame(n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(4 * n, 2 * n);
    for i in 0..2 * n {
        f[(i, i)] = 1.0;
        f[(2 * n + i, i)] = 1.0;
    }
    f
}

/// `#{k ≥ 1 : (kπ/L)² < ω²}`, the Dirichlet Morse index of `−x'' − ω²x` on an interval of length `L`.
pub fn harmonic_dirichlet_count(omega: f64, length: f64) -> i64 {
    (1..).take_while(|&k| (k as f64 * PI / length).powi(2) < omega * omega).count() as i64
}

/// Negative eigenvalues of `−x'' − ω²x` with Neumann ends: `k = 0, 1, …` with `(kπ/L)² < ω²`.
pub fn harmonic_neumann_count(omega: f64, length: f64) -> i64 {
    (0..).take_while(|&k| (k as f64 * PI / length).powi(2) < omega * omega).count() as i64
}

/// `Σ_{i<j} mᵢmⱼ / |qᵢ − qⱼ|` with bodies stored consecutively in `q`.
pub fn newton_potential(masses: &[f64], dim: usize, q: &DVector<f64>) -> f64 {
    let mut u = 0.0;
    for i in 0..masses.len() {
        for j in i + 1..masses.len() {
            let r = (0..dim).map(|k| (q[i * dim + k] - q[j * dim + k]).powi(2)).sum::<f64>().sqrt();
            u += masses[i] * masses[j] / r;
        }
    }
    u
}

/// Central differences of the gradient of `f`, one coordinate at a time.
pub fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, q: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(q.len(), |i, _| {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[i] += h;
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// Fourth-order central differences of the Hessian of `f`.
pub fn fd_hessian(f: &dyn Fn(&DVector<f64>) -> f64, q: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = q.len();
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut x = q.clone();
        x[di] += si * h;
        x[dj] += sj * h;
        f(&x)
    };
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // second-order mixed stencil, Richardson-combined with the stencil at 2h
            let mixed = |s: f64| {
                (eval(i, s, j, s) - eval(i, s, j, -s) - eval(i, -s, j, s) + eval(i, -s, j, -s)) / (4.0 * s * s * h * h)
            };
            out[(i, j)] = (4.0 * mixed(1.0) - mixed(2.0)) / 3.0;
        }
    }
    out
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Smallest singular value of `[A B]` for orthonormal frames: zero exactly on intersection.
pub fn transversality(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let q = |f: &DMatrix<f64>| f.clone().qr().q();
    let mut both = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    both.columns_mut(0, a.ncols()).copy_from(&q(a));
    both.columns_mut(a.ncols(), b.ncols()).copy_from(&q(b));
    both.singular_values().min()
}

/// `U₀·exp(i(tH + sin(πt)K))`: starts at `U₀`, ends at `U₀·exp(iH)`.
pub fn unitary_path(
    u0: DMatrix<Complex<f64>>,
    h: DMatrix<Complex<f64>>,
    k: DMatrix<Complex<f64>>,
) -> impl Fn(f64) -> DMatrix<f64> + Send + Sync {
    move |t| {
        let g = h.map(|z| z * t) + k.map(|z| z * (PI * t).sin());
        unitary_frame(&(&u0 * expi(&g)))
    }
}
