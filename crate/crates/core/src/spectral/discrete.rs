//! Finite-difference surrogates of Sturm–Liouville operators with Lagrangian boundary conditions.
//!
//! The quadratic form `∫ ⟨Px',x'⟩ + 2⟨Qx,x'⟩ + ⟨Rx,x⟩ − ⟨ν,d⟩` is discretized on `N` interior
//! nodes; `ν = (−x^{[1]}(a), x^{[1]}(b))`, `d = (x(a), x(b))`. A boundary condition allowing the
//! values `d = Ec` contributes `−cᵀBc` and extra unknowns `c` bordering a block-tridiagonal core.

use nalgebra::{DMatrix, DVector};

use super::{SpectralCount, SpectralError};
use crate::linalg::{self, symmetrize};
use crate::sturm::{BoundaryCondition, SlProblem};
use crate::symplectic::SymplecticSpace;

/// Grid size used by cross-checks.
pub const DEFAULT_GRID: usize = 1024;

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    n: usize,
    grid: usize,
    h: f64,
    /// Interior diagonal blocks.
    diag: Vec<DMatrix<f64>>,
    /// `sub[i]` couples interior node `i + 1` to node `i`.
    sub: Vec<DMatrix<f64>>,
    /// Coupling of the first and last interior node to the border unknowns.
    border_first: DMatrix<f64>,
    border_last: DMatrix<f64>,
    border: DMatrix<f64>,
}

/// `(B, E)` with `d = Ec` admissible boundary values and `−cᵀBc` the boundary energy.
fn boundary_energy(n: usize, bc: &BoundaryCondition) -> Result<(DMatrix<f64>, DMatrix<f64>), SpectralError> {
    let frame = match bc {
        BoundaryCondition::Dirichlet => return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(2 * n, 0))),
        BoundaryCondition::Neumann => {
            return Ok((DMatrix::zeros(2 * n, 2 * n), DMatrix::identity(2 * n, 2 * n)));
        }
        BoundaryCondition::GeneralLagrangian(f) => {
            if f.space() != SymplecticSpace::boundary(n, n) {
                return Err(SpectralError::BcEliminationSingular("frame is not in the boundary space".into()));
            }
            linalg::orthonormal_basis(f.frame(), 1e-12)
        }
        BoundaryCondition::FriedrichsAtSingular => {
            return Err(SpectralError::BcEliminationSingular("Friedrichs data needs a trace pull-back".into()))
        }
    };
    let k = 2 * n;
    let mut nu = DMatrix::zeros(k, k);
    let mut d = DMatrix::zeros(k, k);
    for i in 0..n {
        for j in 0..k {
            nu[(i, j)] = -frame[(i, j)];
            d[(i, j)] = frame[(n + i, j)];
            nu[(n + i, j)] = frame[(2 * n + i, j)];
            d[(n + i, j)] = frame[(3 * n + i, j)];
        }
    }
    // one SVD fixes both the admissible values `E` and the pseudo-inverse on them
    let svd = linalg::svd(&d);
    let (u, v, sv) = (&svd.u, &svd.v, &svd.s);
    let smax = sv[0];
    // columns are orthonormal, so singular values are on the unit scale
    let keep: Vec<usize> = (0..k).filter(|&i| sv[i] > 1e-12 && sv[i] > 1e-10 * smax).collect();
    if keep.is_empty() {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(k, 0)));
    }
    let e = DMatrix::from_columns(&keep.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let mut pinv = DMatrix::zeros(k, k);
    for &i in &keep {
        pinv += v.column(i) * u.column(i).transpose() / sv[i];
    }
    let b = e.transpose() * &nu * pinv * &e;
    let asym = linalg::max_abs(&(&b - b.transpose()));
    // an isotropy defect ε of the frame shows up as ε/σ_min² in the asymmetry
    let smin = keep.iter().map(|&i| sv[i]).fold(f64::INFINITY, f64::min);
    if asym > 1e-8 * (1.0 + linalg::max_abs(&b)) + 1e-13 / (smin * smin) {
        return Err(SpectralError::BcEliminationSingular(format!("boundary form is not symmetric ({asym:.2e})")));
    }
    Ok((symmetrize(&b), e))
}

impl DiscreteOperator {
    /// Assembles the operator on `grid` interior nodes.
    pub fn new(problem: &SlProblem, bc: &BoundaryCondition, grid: usize) -> Result<Self, SpectralError> {
        if grid < 16 {
            return Err(SpectralError::GridTooCoarse(grid));
        }
        let (a, b) = problem.interval();
        if !problem.is_regular() {
            return Err(SpectralError::NotRegular);
        }
        let n = problem.dim();
        let h = (b - a) / (grid + 1) as f64;
        let nodes = grid + 2;
        let mut diag: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); nodes];
        let mut sub: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); nodes - 1];
        for i in 0..nodes - 1 {
            let tm = a + (i as f64 + 0.5) * h;
            let p = symmetrize(&problem.p(tm)) / h;
            let q = problem.q(tm);
            let sq = symmetrize(&q);
            diag[i] += &p - &sq;
            diag[i + 1] += &p + &sq;
            sub[i] = -&p + (&q - q.transpose()) * 0.5;
        }
        for (i, d) in diag.iter_mut().enumerate() {
            let w = if i == 0 || i == nodes - 1 { 0.5 * h } else { h };
            *d += symmetrize(&problem.r(a + i as f64 * h)) * w;
        }
        let (bmat, e) = boundary_energy(n, bc)?;
        let k = e.ncols();
        let (e_top, e_bot) = (e.rows(0, n).into_owned(), e.rows(n, n).into_owned());
        let border = if k > 0 {
            e_top.transpose() * &diag[0] * &e_top + e_bot.transpose() * &diag[nodes - 1] * &e_bot - bmat
        } else {
            DMatrix::zeros(0, 0)
        };
        let border_first = &sub[0] * &e_top;
        let border_last = sub[nodes - 2].transpose() * &e_bot;
        let op = Self {
            n,
            grid,
            h,
            diag: diag[1..nodes - 1].to_vec(),
            sub: sub[1..nodes - 2].to_vec(),
            border_first,
            border_last,
            border: symmetrize(&border),
        };
        Ok(op)
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn border_dim(&self) -> usize {
        self.border.nrows()
    }

    /// Dense mass-normalized matrix `M^{-1/2} K M^{-1/2}`; for tests and small grids.
    pub fn dense(&self) -> DMatrix<f64> {
        let (n, g, k) = (self.n, self.grid, self.border_dim());
        let size = n * g + k;
        let mut m = DMatrix::zeros(size, size);
        let sh = self.h.sqrt();
        let sb = (0.5 * self.h).sqrt();
        for i in 0..g {
            m.view_mut((i * n, i * n), (n, n)).copy_from(&(&self.diag[i] / self.h));
        }
        for i in 0..g - 1 {
            let s = &self.sub[i] / self.h;
            m.view_mut(((i + 1) * n, i * n), (n, n)).copy_from(&s);
            m.view_mut((i * n, (i + 1) * n), (n, n)).copy_from(&s.transpose());
        }
        if k > 0 {
            let off = n * g;
            m.view_mut((off, off), (k, k)).copy_from(&(&self.border / (0.5 * self.h)));
            let f = &self.border_first / (sh * sb);
            let l = &self.border_last / (sh * sb);
            m.view_mut((0, off), (n, k)).copy_from(&f);
            m.view_mut((off, 0), (k, n)).copy_from(&f.transpose());
            let mut v = m.view_mut(((g - 1) * n, off), (n, k));
            v += &l;
            let mut v = m.view_mut((off, (g - 1) * n), (k, n));
            v += &l.transpose();
        }
        m
    }

    /// Eigenvalues below `mu`: the inertia of `K − μM` by bordered block LDLᵀ.
    fn count(&self, mu: f64) -> usize {
        let n = self.n;
        let g = self.grid;
        let k = self.border_dim();
        let shift = DMatrix::<f64>::identity(n, n) * (mu * self.h);
        let scale = self.diag.iter().map(linalg::max_abs).fold(0.0, f64::max).max(1e-300);
        let tiny = 1e-14 * scale;
        let mut negatives = 0usize;
        if n == 1 {
            let mut d_prev = 0.0;
            let mut ds = Vec::with_capacity(g);
            for i in 0..g {
                let mut d = self.diag[i][(0, 0)] - mu * self.h;
                if i > 0 {
                    let l = self.sub[i - 1][(0, 0)];
                    d -= l * l / d_prev;
                }
                if d.abs() < tiny {
                    d = tiny;
                }
                if d < 0.0 {
                    negatives += 1;
                }
                ds.push(d);
                d_prev = d;
            }
            if k > 0 {
                negatives += self.border_inertia(mu, |rhs| self.solve_scalar(&ds, rhs));
            }
            return negatives;
        }
        let mut dinv: Vec<DMatrix<f64>> = Vec::with_capacity(g);
        for i in 0..g {
            let mut d = &self.diag[i] - &shift;
            if i > 0 {
                let l = &self.sub[i - 1];
                d -= l * &dinv[i - 1] * l.transpose();
            }
            let d = symmetrize(&d);
            let ev = linalg::sym_eigenvalues(&d);
            let mut d_fixed = d.clone();
            if ev.iter().any(|e| e.abs() < tiny) {
                d_fixed += DMatrix::identity(n, n) * (2.0 * tiny);
            }
            negatives += linalg::sym_eigenvalues(&d_fixed).iter().filter(|&&e| e < 0.0).count();
            dinv.push(d_fixed.try_inverse().unwrap_or_else(|| DMatrix::identity(n, n) / tiny));
        }
        if k > 0 {
            negatives += self.border_inertia(mu, |rhs| self.solve_block(&dinv, rhs));
        }
        negatives
    }

    /// Negative inertia of the Schur complement `B − μ(h/2) − Cᵀ T⁻¹ C`.
    fn border_inertia(&self, mu: f64, solve: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> usize {
        let (n, g, k) = (self.n, self.grid, self.border_dim());
        let mut c = DMatrix::zeros(n * g, k);
        c.view_mut((0, 0), (n, k)).copy_from(&self.border_first);
        let mut last = c.view_mut(((g - 1) * n, 0), (n, k));
        last += &self.border_last;
        let x = solve(&c);
        let s = &self.border - DMatrix::identity(k, k) * (mu * 0.5 * self.h) - c.transpose() * x;
        linalg::sym_eigenvalues(&symmetrize(&s)).iter().filter(|&&e| e < 0.0).count()
    }

    fn solve_scalar(&self, ds: &[f64], rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let g = self.grid;
        let mut y = rhs.clone();
        // T = L D Lᵀ with unit lower bidiagonal L, l_i = sub_i / d_{i}
        for i in 1..g {
            let l = self.sub[i - 1][(0, 0)] / ds[i - 1];
            for j in 0..y.ncols() {
                y[(i, j)] -= l * y[(i - 1, j)];
            }
        }
        for i in 0..g {
            for j in 0..y.ncols() {
                y[(i, j)] /= ds[i];
            }
        }
        for i in (0..g - 1).rev() {
            let l = self.sub[i][(0, 0)] / ds[i];
            for j in 0..y.ncols() {
                y[(i, j)] -= l * y[(i + 1, j)];
            }
        }
        y
    }

    fn solve_block(&self, dinv: &[DMatrix<f64>], rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, g) = (self.n, self.grid);
        let cols = rhs.ncols();
        let mut y: Vec<DMatrix<f64>> = (0..g).map(|i| rhs.rows(i * n, n).into_owned()).collect();
        for i in 1..g {
            let l = &self.sub[i - 1] * &dinv[i - 1];
            let prev = y[i - 1].clone();
            y[i] -= l * prev;
        }
        for i in 0..g {
            y[i] = &dinv[i] * &y[i];
        }
        for i in (0..g - 1).rev() {
            let lt = &dinv[i] * self.sub[i].transpose();
            let next = y[i + 1].clone();
            y[i] -= lt * next;
        }
        let mut out = DMatrix::zeros(n * g, cols);
        for (i, b) in y.iter().enumerate() {
            out.view_mut((i * n, 0), (n, cols)).copy_from(b);
        }
        out
    }

    /// Gershgorin bounds of the mass-normalized operator.
    fn gershgorin(&self) -> (f64, f64) {
        let (n, g, k) = (self.n, self.grid, self.border_dim());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let row_abs = |m: &DMatrix<f64>, r: usize| -> f64 { m.row(r).iter().map(|v| v.abs()).sum() };
        let sb = 0.5 * self.h;
        let mix = 1.0 / (self.h * sb).sqrt();
        for i in 0..g {
            for r in 0..n {
                let c = self.diag[i][(r, r)] / self.h;
                let mut rad = (row_abs(&self.diag[i], r) - self.diag[i][(r, r)].abs()) / self.h;
                if i > 0 {
                    rad += row_abs(&self.sub[i - 1], r) / self.h;
                }
                if i + 1 < g {
                    rad += self.sub[i].column(r).iter().map(|v| v.abs()).sum::<f64>() / self.h;
                }
                if i == 0 && k > 0 {
                    rad += row_abs(&self.border_first, r) * mix;
                }
                if i == g - 1 && k > 0 {
                    rad += row_abs(&self.border_last, r) * mix;
                }
                lo = lo.min(c - rad);
                hi = hi.max(c + rad);
            }
        }
        for r in 0..k {
            let c = self.border[(r, r)] / sb;
            let rad = (row_abs(&self.border, r) - self.border[(r, r)].abs()) / sb
                + (self.border_first.column(r).iter().map(|v| v.abs()).sum::<f64>()
                    + self.border_last.column(r).iter().map(|v| v.abs()).sum::<f64>())
                    * mix;
            lo = lo.min(c - rad);
            hi = hi.max(c + rad);
        }
        (lo, hi)
    }

    /// The `m` smallest eigenvalues by bisection on counts.
    pub fn lowest_eigenvalues(&self, m: usize) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let size = self.size();
        (0..m.min(size))
            .map(|j| {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if self.count(mid) > j {
                        b = mid;
                    } else {
                        a = mid;
                    }
                    if b - a <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
                        break;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    /// Negative eigenvalues beyond the kernel threshold `1e-9 ‖A‖`.
    pub fn negative_count(&self) -> usize {
        self.count(-self.kernel_tol())
    }
}

impl SpectralCount for DiscreteOperator {
    fn size(&self) -> usize {
        self.n * self.grid + self.border_dim()
    }

    fn count_below(&self, mu: f64) -> usize {
        self.count(mu)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }
}

/// A symmetric matrix family member for generic flows.
#[derive(Clone, Debug)]
pub struct DenseSymmetric {
    eigenvalues: Vec<f64>,
}

impl DenseSymmetric {
    pub fn new(a: &DMatrix<f64>) -> Self {
        Self { eigenvalues: linalg::sym_eigenvalues(a) }
    }

    pub fn from_diagonal(d: &DVector<f64>) -> Self {
        Self::new(&DMatrix::from_diagonal(d))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl SpectralCount for DenseSymmetric {
    fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    fn count_below(&self, mu: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e < mu).count()
    }

    fn norm_bound(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::{parse_catalog, Builtin};
    use std::f64::consts::PI;

    fn free() -> SlProblem {
        SlProblem::new(Builtin::schrodinger(1, |_| DMatrix::zeros(1, 1)), (0.0, 1.0))
    }

    #[test]
    fn dirichlet_laplacian_converges() {
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&g| {
                let op = DiscreteOperator::new(&free(), &BoundaryCondition::Dirichlet, g).unwrap();
                (op.lowest_eigenvalues(1)[0] - PI * PI).abs()
            })
            .collect();
        assert!(errs[0] < 1e-2 && errs[1] < errs[0] / 3.5);
        // dense oracle
        let op = DiscreteOperator::new(&free(), &BoundaryCondition::Dirichlet, 64).unwrap();
        let dense = linalg::sym_eigenvalues(&op.dense());
        let bis = op.lowest_eigenvalues(3);
        for j in 0..3 {
            assert!((dense[j] - bis[j]).abs() < 1e-8 * dense[j].abs());
        }
    }

    #[test]
    fn harmonic_negative_count() {
        let p = parse_catalog("harmonic(10)").unwrap();
        let op = DiscreteOperator::new(&p, &BoundaryCondition::Dirichlet, 512).unwrap();
        assert_eq!(op.negative_count(), 3);
    }

    #[test]
    fn neumann_frame_matches_builtin() {
        let s = SymplecticSpace::standard(1);
        let frame = s.neumann().direct_sum(&s.neumann());
        let p = parse_catalog("harmonic(1.3)").unwrap();
        let a = DiscreteOperator::new(&p, &BoundaryCondition::Neumann, 256).unwrap();
        let b = DiscreteOperator::new(&p, &BoundaryCondition::GeneralLagrangian(frame), 256).unwrap();
        let (ea, eb) = (a.lowest_eigenvalues(2), b.lowest_eigenvalues(2));
        assert!((ea[0] + 1.69).abs() < 1e-2, "{ea:?}");
        assert!((ea[0] - eb[0]).abs() < 1e-9 && (ea[1] - eb[1]).abs() < 1e-9);
        // bordered counting agrees with the dense spectrum
        let dense = linalg::sym_eigenvalues(&b.dense());
        assert!((dense[0] - eb[0]).abs() < 1e-8);
    }

    #[test]
    fn robin_sign() {
        // p_a = κ x_a with κ > 0 adds +κ x_a² to the energy
        let s = SymplecticSpace::boundary(1, 1);
        let kappa = 50.0;
        let f = DMatrix::from_column_slice(4, 2, &[kappa, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let bc = BoundaryCondition::GeneralLagrangian(crate::symplectic::LagrangianFrame::new(s, f).unwrap());
        let op = DiscreteOperator::new(&free(), &bc, 256).unwrap();
        let l = op.lowest_eigenvalues(1)[0];
        assert!(l > 0.0 && l < PI * PI);
        let f = DMatrix::from_column_slice(4, 2, &[-kappa, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let bc = BoundaryCondition::GeneralLagrangian(crate::symplectic::LagrangianFrame::new(s, f).unwrap());
        let op = DiscreteOperator::new(&free(), &bc, 256).unwrap();
        // ghost ≈ −κ²
        assert!((op.lowest_eigenvalues(1)[0] + kappa * kappa).abs() < 0.05 * kappa * kappa);
    }

    #[test]
    fn matrix_problem_blocks() {
        let c = Builtin::new(
            2,
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            |t| DMatrix::from_row_slice(2, 2, &[0.3, t, -0.2, 0.1]),
            |_| DMatrix::from_row_slice(2, 2, &[-30.0, 1.0, 1.0, -5.0]),
        );
        let p = SlProblem::new(c, (0.0, 1.0));
        let s = SymplecticSpace::standard(2);
        let bc = BoundaryCondition::GeneralLagrangian(s.neumann().direct_sum(&s.dirichlet()));
        let op = DiscreteOperator::new(&p, &bc, 64).unwrap();
        let dense = op.dense();
        assert!(linalg::max_abs(&(&dense - dense.transpose())) < 1e-12);
        let ev = linalg::sym_eigenvalues(&dense);
        for mu in [-40.0, -10.0, 0.0, 25.0] {
            assert_eq!(op.count_below(mu), ev.iter().filter(|&&e| e < mu).count());
        }
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(
            DiscreteOperator::new(&free(), &BoundaryCondition::Dirichlet, 8),
            Err(SpectralError::GridTooCoarse(8))
        ));
    }
}
