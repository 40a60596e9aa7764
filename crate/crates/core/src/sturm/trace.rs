//! Boundary brackets `[f, g] = ⟨f^{[1]}, g⟩ − ⟨f, g^{[1]}⟩` and the trace map into boundary data.

use std::sync::Arc;

use nalgebra::DVector;

use super::{Endpoint, EndpointKind, SlError, SlProblem};

/// Value and quasi-derivative of a function at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub value: DVector<f64>,
    pub quasi: DVector<f64>,
}

impl BoundaryData {
    pub fn new(value: DVector<f64>, quasi: DVector<f64>) -> Self {
        Self { value, quasi }
    }

    pub fn scalar(value: f64, quasi: f64) -> Self {
        Self { value: DVector::from_element(1, value), quasi: DVector::from_element(1, quasi) }
    }

    /// From a phase vector `(x^{[1]}, x)`.
    pub fn from_phase(z: &DVector<f64>) -> Self {
        let n = z.len() / 2;
        Self { quasi: z.rows(0, n).into_owned(), value: z.rows(n, n).into_owned() }
    }

    pub fn to_phase(&self) -> DVector<f64> {
        let n = self.value.len();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.quasi);
        z.rows_mut(n, n).copy_from(&self.value);
        z
    }
}

pub fn boundary_bracket(f: &BoundaryData, g: &BoundaryData) -> f64 {
    f.quasi.dot(&g.value) - f.value.dot(&g.quasi)
}

/// `t ↦ (x^{[1]}(t), x(t))`.
pub type PhaseFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// How the left end contributes to the trace.
#[derive(Clone)]
pub enum EndTrace {
    /// Endpoint values `(x^{[1]}(a), x(a))`.
    Regular,
    /// `−[f, yᵢ](a⁺)` for a kernel basis near a singular end.
    Kernel(Vec<PhaseFn>),
    /// Limit-point end: no component.
    LimitPoint,
}

/// Probes `zⱼ` at a regular end with `([f, z₁], …, [f, z_{2n}]) = (x^{[1]}, x)`.
pub fn regular_probes(n: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut z = DVector::zeros(2 * n);
        z[n + i] = 1.0;
        out.push(z);
    }
    for i in 0..n {
        let mut z = DVector::zeros(2 * n);
        z[i] = -1.0;
        out.push(z);
    }
    out
}

/// Bracket limit `t → a⁺` by a decimal ladder of cutoffs with a Cauchy test.
fn left_limit(f: &dyn Fn(f64) -> DVector<f64>, y: &PhaseFn, a: f64, b: f64) -> Result<f64, SlError> {
    let values: Vec<f64> = (1..=9)
        .map(|k| {
            let t = a + (b - a) * 10f64.powi(-k);
            -boundary_bracket(&BoundaryData::from_phase(&f(t)), &BoundaryData::from_phase(&y(t)))
        })
        .collect();
    let last = values[values.len() - 1];
    let tol = 1e-6 * (1.0 + last.abs());
    let incs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = &incs[incs.len() - 3..];
    if !last.is_finite() || tail.iter().any(|&d| d > tol) {
        return Err(SlError::BracketLimitDiverges(*tail.last().unwrap_or(&f64::NAN)));
    }
    Ok(last)
}

/// `(−[f, yᵢ](a⁺), [f, zⱼ](b))`, left block first.
pub fn trace_map(
    problem: &SlProblem,
    f: &dyn Fn(f64) -> DVector<f64>,
    left: &EndTrace,
    probes: &[DVector<f64>],
) -> Result<DVector<f64>, SlError> {
    let (a, b) = problem.interval();
    let mut out: Vec<f64> = Vec::new();
    match left {
        EndTrace::Regular => out.extend(f(a).iter()),
        EndTrace::Kernel(ys) => {
            if problem.endpoint_kind(Endpoint::Left) == EndpointKind::SingularLimitPoint {
                return Err(SlError::LimitPointEnd);
            }
            for y in ys {
                out.push(left_limit(f, y, a, b)?);
            }
        }
        EndTrace::LimitPoint => {}
    }
    let fb = BoundaryData::from_phase(&f(b));
    for z in probes {
        out.push(boundary_bracket(&fb, &BoundaryData::from_phase(z)));
    }
    Ok(DVector::from_vec(out))
}
