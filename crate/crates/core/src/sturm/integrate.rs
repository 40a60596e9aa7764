//! Fundamental solutions `γ' = J H(t) γ` by an embedded Dormand–Prince 5(4) pair on the propagator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{SlError, SlProblem};
use crate::linalg::max_abs;
use crate::maslov::LagrangianPath;
use crate::symplectic::{symplectic_correction, symplectic_residual_in, LagrangianFrame, SymplecticSpace};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Step propagators with a larger residual are projected back onto Sp(2n).
    pub project_above: f64,
    /// Hard ceiling for the per-step residual before projection.
    pub drift_budget: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { atol: 1e-11, rtol: 1e-10, project_above: 1e-10, drift_budget: 1e-8, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Step {
    phi: DMatrix<f64>,
    err: DMatrix<f64>,
}

/// One Dormand–Prince step of the propagator from `t` to `t + h`.
fn dopri_step(problem: &SlProblem, t: f64, h: f64, a0: &DMatrix<f64>) -> Result<Step, SlError> {
    let d = a0.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    k.push(a0.clone());
    for i in 1..7 {
        let mut y = id.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[i][j] != 0.0 {
                y += kj * (h * A[i][j]);
            }
        }
        let ai = problem.system_matrix(t + C[i] * h)?;
        if i == 6 {
            // the last stage input is the fifth-order solution
            let err = k.iter().zip(E.iter()).fold(&ai * &y * (h * E[6]), |acc, (kj, e)| acc + kj * (h * e));
            return Ok(Step { phi: y, err });
        }
        k.push(ai * y);
    }
    unreachable!()
}

/// `diag(σ^{-1/2}, σ^{1/2})` balancing quasi-derivatives against positions.
fn balance(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows() / 2;
    let px = a.view((0, n), (n, n)).norm();
    let xp = a.view((n, 0), (n, n)).norm();
    if px <= 1e-300 || xp <= 1e-300 {
        return 1.0;
    }
    (px / xp).sqrt().clamp(1e-8, 1e8)
}

/// [`balance`] without the fallback for vanishing blocks, floored at `1/(1 + |t|)` so that
/// nearly free directions keep the length scale of the interval.
fn path_balance(a: &DMatrix<f64>, t: f64) -> f64 {
    let n = a.nrows() / 2;
    let px = a.view((0, n), (n, n)).norm();
    let xp = a.view((n, 0), (n, n)).norm();
    let sigma = if xp > 0.0 { (px / xp).sqrt() } else { 1.0 };
    sigma.max(1.0 / (1.0 + t.abs())).min(1e8)
}

fn scale(m: &DMatrix<f64>, sigma: f64, forward: bool) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let s = if forward { sigma.sqrt() } else { 1.0 / sigma.sqrt() };
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let ri = if i < n { 1.0 / s } else { s };
        let cj = if j < n { s } else { 1.0 / s };
        m[(i, j)] * ri * cj
    })
}

/// `γ(t)` with `γ(base) = I`, stored at accepted step nodes.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    problem: SlProblem,
    base: f64,
    span: (f64, f64),
    nodes: Vec<f64>,
    gammas: Vec<DMatrix<f64>>,
    max_step_residual: f64,
    projections: usize,
}

/// Integrates the fundamental matrix from `base` across `span`.
pub fn fundamental_solution(
    problem: &SlProblem,
    base: f64,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<FundamentalSolution, SlError> {
    let (lo, hi) = span;
    if !(lo.is_finite() && hi.is_finite() && lo <= base && base <= hi && lo < hi) {
        return Err(SlError::InvalidSpan(lo, hi));
    }
    let d = 2 * problem.dim();
    let mut fs = FundamentalSolution {
        problem: problem.clone(),
        base,
        span,
        nodes: vec![base],
        gammas: vec![DMatrix::identity(d, d)],
        max_step_residual: 0.0,
        projections: 0,
    };
    let mut backward = march(problem, base, lo, opts, &mut fs)?;
    let forward = march(problem, base, hi, opts, &mut fs)?;
    backward.reverse();
    let (mut nodes, mut gammas): (Vec<f64>, Vec<DMatrix<f64>>) = backward.into_iter().unzip();
    nodes.push(base);
    gammas.push(DMatrix::identity(d, d));
    for (t, g) in forward {
        nodes.push(t);
        gammas.push(g);
    }
    fs.nodes = nodes;
    fs.gammas = gammas;
    Ok(fs)
}

fn march(
    problem: &SlProblem,
    base: f64,
    end: f64,
    opts: &IntegratorOptions,
    fs: &mut FundamentalSolution,
) -> Result<Vec<(f64, DMatrix<f64>)>, SlError> {
    let mut out = Vec::new();
    if end == base {
        return Ok(out);
    }
    let dir = (end - base).signum();
    let space = SymplecticSpace::standard(problem.dim());
    let d = 2 * problem.dim();
    let mut t = base;
    let mut gamma = DMatrix::<f64>::identity(d, d);
    let mut a_t = problem.system_matrix(t)?;
    let mut h = dir * ((end - base).abs() / 64.0).min(0.1 / (1.0 + max_abs(&scale(&a_t, balance(&a_t), true))));
    let mut steps = 0usize;
    while (end - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(SlError::StepSizeUnderflow(t));
        }
        if (t + h - end) * dir > 0.0 {
            h = end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1e-300) {
            return Err(SlError::StepSizeUnderflow(t));
        }
        let sigma = balance(&a_t);
        let step = dopri_step(problem, t, h, &a_t)?;
        let phi = scale(&step.phi, sigma, true);
        let err = max_abs(&scale(&step.err, sigma, true)) / (opts.atol + opts.rtol * max_abs(&phi).max(1.0));
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }
        let res = symplectic_residual_in(&space, &phi);
        fs.max_step_residual = fs.max_step_residual.max(res);
        if res > opts.drift_budget {
            return Err(SlError::DriftBudgetExceeded(res));
        }
        let phi = if res > opts.project_above {
            fs.projections += 1;
            scale(&symplectic_correction(&space, &phi, 1e-15), sigma, false)
        } else {
            step.phi
        };
        t = if (t + h - end) * dir >= 0.0 { end } else { t + h };
        gamma = phi * gamma;
        out.push((t, gamma.clone()));
        a_t = problem.system_matrix(t)?;
        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= grow;
    }
    Ok(out)
}

impl FundamentalSolution {
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn problem(&self) -> &SlProblem {
        &self.problem
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `γ(t)`: one step from the nearest node; `t` is clamped into the span.
    pub fn gamma(&self, t: f64) -> DMatrix<f64> {
        let t = t.clamp(self.span.0, self.span.1);
        let k = self.nodes.partition_point(|&s| s < t);
        let nearest = if k == 0 {
            0
        } else if k >= self.nodes.len() {
            self.nodes.len() - 1
        } else if t - self.nodes[k - 1] <= self.nodes[k] - t {
            k - 1
        } else {
            k
        };
        let t0 = self.nodes[nearest];
        if t == t0 {
            return self.gammas[nearest].clone();
        }
        let step = self.problem.system_matrix(t0).and_then(|a| dopri_step(&self.problem, t0, t - t0, &a));
        match step {
            Ok(s) => s.phi * &self.gammas[nearest],
            Err(_) => self.gammas[nearest].clone(),
        }
    }

    /// `γ` at the span end farthest from the base.
    pub fn monodromy(&self) -> DMatrix<f64> {
        let far = if self.span.1 - self.base >= self.base - self.span.0 { self.span.1 } else { self.span.0 };
        self.gamma(far)
    }

    /// Largest per-step residual `‖ΦᵀJΦ − J‖` before projection.
    pub fn step_drift(&self) -> f64 {
        self.max_step_residual
    }

    /// `max ‖γᵀJγ − J‖ / max(1, ‖γ‖²)` over the stored nodes.
    pub fn relative_drift(&self) -> f64 {
        let space = SymplecticSpace::standard(self.problem.dim());
        self.gammas.iter().map(|g| symplectic_residual_in(&space, g) / max_abs(g).powi(2).max(1.0)).fold(0.0, f64::max)
    }

    pub fn projections(&self) -> usize {
        self.projections
    }

    /// `t ↦ γ(t) ℓ` on the span.
    pub fn path(&self, initial: &LagrangianFrame) -> LagrangianPath<'_> {
        self.make_path(initial, false)
    }

    /// `t ↦ S(t) γ(t) ℓ` with the step balancing `S(t) = diag(σ^{-1/2}, σ^{1/2})`.
    ///
    /// `S(t)` fixes `Λ_D` and `Λ_N`, so crossings with either and their forms are those of
    /// [`path`](Self::path), while the balanced frames stay well separated from `Λ_D` near a
    /// singular end, where `x/x^{[1]}` shrinks with the distance to it.
    pub fn balanced_path(&self, initial: &LagrangianFrame) -> LagrangianPath<'_> {
        self.make_path(initial, true)
    }

    fn make_path(&self, initial: &LagrangianFrame, balanced: bool) -> LagrangianPath<'_> {
        let space = initial.space();
        let init = initial.frame().clone();
        let samples = (4 * self.nodes.len()).clamp(256, 1 << 14);
        LagrangianPath::new(space, self.span, move |t| {
            let mut frame = self.gamma(t) * &init;
            if balanced {
                let sigma = self.problem.system_matrix(t).map(|a| path_balance(&a, t)).unwrap_or(1.0);
                frame = scale(&frame, sigma, true);
            }
            LagrangianFrame::orthonormalized(space, &frame)
        })
        .with_samples(samples)
        .with_grid(self.nodes.windows(2).flat_map(|w| [w[0], 0.5 * (w[0] + w[1])]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::Builtin;

    fn harmonic(omega: f64) -> SlProblem {
        SlProblem::new(Builtin::schrodinger(1, move |_| DMatrix::from_element(1, 1, -omega * omega)), (0.0, 10.0))
    }

    #[test]
    fn harmonic_quarter_period() {
        let fs =
            fundamental_solution(&harmonic(1.0), 0.0, (0.0, std::f64::consts::FRAC_PI_2), &Default::default()).unwrap();
        // (p, x) = (x', x): x(t) = x₀ cos t + p₀ sin t
        let g = fs.gamma(std::f64::consts::FRAC_PI_2);
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(max_abs(&(g - want)) < 1e-9);
        assert!(fs.step_drift() < 1e-8);
    }

    #[test]
    fn free_particle_is_a_shear() {
        let p = SlProblem::new(Builtin::schrodinger(1, |_| DMatrix::zeros(1, 1)), (0.0, 3.0));
        let fs = fundamental_solution(&p, 0.0, (0.0, 3.0), &Default::default()).unwrap();
        for t in [0.3, 1.7, 3.0] {
            let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0]);
            assert!(max_abs(&(fs.gamma(t) - want)) < 1e-12);
        }
    }

    #[test]
    fn backward_and_dense_output() {
        let w = 3.0;
        let fs = fundamental_solution(&harmonic(w), 1.0, (0.0, 2.0), &Default::default()).unwrap();
        for t in [0.0, 0.123, 0.77, 1.0, 1.4567, 2.0] {
            let s = t - 1.0;
            let want =
                DMatrix::from_row_slice(2, 2, &[(w * s).cos(), -w * (w * s).sin(), (w * s).sin() / w, (w * s).cos()]);
            assert!(max_abs(&(fs.gamma(t) - want)) < 1e-8, "t = {t}");
        }
        assert!(fs.relative_drift() < 1e-8);
    }

    #[test]
    fn stiff_singular_potential_stays_symplectic() {
        let p = SlProblem::new(Builtin::schrodinger(1, |t| DMatrix::from_element(1, 1, -20.0 / (t * t))), (1e-4, 1.0));
        let fs = fundamental_solution(&p, 1.0, (1e-4, 1.0), &Default::default()).unwrap();
        assert!(fs.step_drift() < 1e-8);
        assert!(fs.relative_drift() < 1e-8);
    }
}
