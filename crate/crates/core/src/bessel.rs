//! Closed forms for `−x'' + q t⁻² x` and its matrix version `−x'' + R(t) t⁻² x`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::sturm::{Builtin, EndpointKind, SlProblem};
use crate::symplectic::{LagrangianFrame, SymplecticSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("parameter {0} is outside the admissible range")]
    OutOfRange(f64),
    #[error("no tail model declared for the singular end")]
    TailModelMissing,
    #[error("q = {0} is limit point at 0; no boundary condition is imposed there")]
    LimitPointNoCondition(f64),
}

/// Threshold of the oscillation test; `q < −1/4` oscillates.
pub const CRITICAL_Q: f64 = -0.25;
/// Limit-circle / limit-point boundary at the origin.
pub const LIMIT_POINT_Q: f64 = 0.75;
const THRESHOLD_TOL: f64 = 1e-12;

/// A consistent `(q, r)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselParam {
    pub q: f64,
    pub r: f64,
}

impl BesselParam {
    pub fn from_q(q: f64) -> Result<Self, BesselError> {
        Ok(Self { q, r: r_of_q(q)? })
    }

    pub fn from_r(r: f64) -> Result<Self, BesselError> {
        Ok(Self { q: q_of_r(r)?, r })
    }
}

/// `q = −1/4 + r²` for `r ≥ 0`, `−1/4 − r²` for `r < 0`; defined for `r < 1`.
pub fn q_of_r(r: f64) -> Result<f64, BesselError> {
    if !r.is_finite() || r >= 1.0 {
        return Err(BesselError::OutOfRange(r));
    }
    Ok(if r >= 0.0 { -0.25 + r * r } else { -0.25 - r * r })
}

/// Inverse of [`q_of_r`] on `q < 3/4`.
pub fn r_of_q(q: f64) -> Result<f64, BesselError> {
    if !q.is_finite() || q >= LIMIT_POINT_Q {
        return Err(BesselError::OutOfRange(q));
    }
    Ok(if q >= CRITICAL_Q { (q + 0.25).sqrt() } else { -(-0.25 - q).sqrt() })
}

/// `(y₁, y₂, y₁', y₂')` at `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionPair {
    pub y1: f64,
    pub y2: f64,
    pub dy1: f64,
    pub dy2: f64,
}

/// The solution pair with `[y₁, y₂] = −1`, branch chosen by the sign of `r`.
///
/// The `r > 0` branch is also used for `r ≥ 1` (limit point).
pub fn singular_solutions(r: f64, t: f64) -> SolutionPair {
    let s = t.sqrt();
    let l = t.ln();
    if r > 0.0 {
        let (u, v) = (t.powf(0.5 - r), t.powf(0.5 + r));
        let (du, dv) = ((0.5 - r) * u / t, (0.5 + r) * v / t);
        SolutionPair { y1: 0.5 * (u + v), y2: (v - u) / (2.0 * r), dy1: 0.5 * (du + dv), dy2: (dv - du) / (2.0 * r) }
    } else if r == 0.0 {
        SolutionPair { y1: s, y2: s * l, dy1: 0.5 / s, dy2: (0.5 * l + 1.0) / s }
    } else {
        let (c, sn) = ((r * l).cos(), (r * l).sin());
        SolutionPair { y1: s * c, y2: s * sn / r, dy1: (0.5 * c - r * sn) / s, dy2: (0.5 * sn / r + c) / s }
    }
}

/// Kernel functions `(u₁, u₂)` used for singular-end traces, with `[u₁, u₂] = 1`.
///
/// For `r > 0`, `u₁ = −t^{1/2−r}/(2r)` and `u₂ = t^{1/2+r}`, so the Friedrichs line is the first axis.
/// Otherwise `(u₁, u₂) = (y₂, y₁)`.
pub fn trace_basis(r: f64, t: f64) -> [(f64, f64); 2] {
    if r > 0.0 {
        let (u, v) = (t.powf(0.5 - r), t.powf(0.5 + r));
        [(-(0.5 - r) * u / t / (2.0 * r), -u / (2.0 * r)), ((0.5 + r) * v / t, v)]
    } else {
        let y = singular_solutions(r, t);
        [(y.dy2, y.y2), (y.dy1, y.y1)]
    }
}

/// Principal exponent `1/2 + √(q + 1/4)` for `q ≥ −1/4`.
pub fn principal_exponent(q: f64) -> f64 {
    0.5 + (q + 0.25).max(0.0).sqrt()
}

/// Zeros in `(ε, c)` of the solution vanishing at `c`, for `q < −1/4`.
///
/// With `ν = √(−1/4 − q)` the solution is `√t sin(ν ln(t/c))`, so the zeros are `c e^{−kπ/ν}`.
pub fn zero_sequence(q: f64, window: (f64, f64)) -> Result<Vec<f64>, BesselError> {
    if !(q < CRITICAL_Q) {
        return Err(BesselError::OutOfRange(q));
    }
    let (eps, c) = window;
    let nu = (-0.25 - q).sqrt();
    let mut out = Vec::new();
    for k in 1.. {
        let t = c * (-(k as f64) * std::f64::consts::PI / nu).exp();
        if t <= eps {
            break;
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselEnd {
    /// `(0, 1]`, singular at 0.
    ZeroEnd,
    /// `[1, ∞)`, singular at ∞.
    InfinityEnd,
}

/// How `R(t)` behaves toward the singular end.
#[derive(Clone, Debug, PartialEq)]
pub enum TailModel {
    Constant(DMatrix<f64>),
    /// `R(t) → limit` at an algebraic rate.
    PowerDecay {
        limit: DMatrix<f64>,
        rate: f64,
    },
}

impl TailModel {
    fn limit(&self) -> &DMatrix<f64> {
        match self {
            TailModel::Constant(m) | TailModel::PowerDecay { limit: m, .. } => m,
        }
    }
}

type RFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// `l_R x = −x'' + R(t) t⁻² x` on `(0, 1]` or `[1, ∞)`.
#[derive(Clone)]
pub struct BesselMatrixProblem {
    r_func: RFn,
    dim: usize,
    end: BesselEnd,
    tail: Option<TailModel>,
}

impl std::fmt::Debug for BesselMatrixProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BesselMatrixProblem").field("dim", &self.dim).field("end", &self.end).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorseClass {
    FiniteMorse,
    InfiniteMorse,
    /// The limit spectrum touches `−1/4`.
    Threshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionVerdict {
    pub eigenvalue: f64,
    pub verdict: MorseClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselClassification {
    pub directions: Vec<DirectionVerdict>,
    pub overall: MorseClass,
    /// Fredholmness of self-adjoint extensions; only asserted at the origin.
    pub fredholm: Option<bool>,
}

impl BesselMatrixProblem {
    pub fn new(dim: usize, end: BesselEnd, r: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { r_func: Arc::new(r), dim, end, tail: None }
    }

    /// Constant coefficient with its own tail model.
    pub fn constant(r: DMatrix<f64>, end: BesselEnd) -> Self {
        let m = r.clone();
        Self { r_func: Arc::new(move |_| m.clone()), dim: r.nrows(), end, tail: Some(TailModel::Constant(r)) }
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn end(&self) -> BesselEnd {
        self.end
    }

    pub fn r(&self, t: f64) -> DMatrix<f64> {
        (self.r_func)(t)
    }

    pub fn to_sl_problem(&self) -> SlProblem {
        let f = self.r_func.clone();
        let n = self.dim;
        let coeffs = Builtin::schrodinger(n, move |t| f(t) / (t * t));
        match self.end {
            BesselEnd::ZeroEnd => {
                let kind = match &self.tail {
                    Some(tail) if linalg::sym_eigenvalues(tail.limit()).iter().all(|&e| e < LIMIT_POINT_Q) => {
                        EndpointKind::SingularLimitCircle
                    }
                    Some(_) => EndpointKind::SingularLimitPoint,
                    None => EndpointKind::Unknown,
                };
                SlProblem::new(coeffs, (0.0, 1.0)).with_endpoints(kind, EndpointKind::Regular)
            }
            BesselEnd::InfinityEnd => SlProblem::new(coeffs, (1.0, f64::INFINITY))
                .with_endpoints(EndpointKind::Regular, EndpointKind::SingularLimitPoint),
        }
        .with_label("bessel-matrix")
    }
}

/// Per-eigendirection comparison of the limiting `R` against `−1/4`.
pub fn classify(problem: &BesselMatrixProblem) -> Result<BesselClassification, BesselError> {
    let tail = problem.tail.as_ref().ok_or(BesselError::TailModelMissing)?;
    let directions: Vec<DirectionVerdict> = linalg::sym_eigenvalues(tail.limit())
        .into_iter()
        .map(|e| {
            let verdict = if e > CRITICAL_Q + THRESHOLD_TOL {
                MorseClass::FiniteMorse
            } else if e < CRITICAL_Q - THRESHOLD_TOL {
                MorseClass::InfiniteMorse
            } else {
                MorseClass::Threshold
            };
            DirectionVerdict { eigenvalue: e, verdict }
        })
        .collect();
    let overall = if directions.iter().any(|d| d.verdict == MorseClass::InfiniteMorse) {
        MorseClass::InfiniteMorse
    } else if directions.iter().any(|d| d.verdict == MorseClass::Threshold) {
        MorseClass::Threshold
    } else {
        MorseClass::FiniteMorse
    };
    let fredholm = match problem.end {
        BesselEnd::ZeroEnd => Some(true),
        BesselEnd::InfinityEnd => None,
    };
    Ok(BesselClassification { directions, overall, fredholm })
}

/// The Friedrichs line in the singular-end trace space, in the [`trace_basis`] coordinates.
pub fn friedrichs_trace_frame(r: f64) -> Result<LagrangianFrame, BesselError> {
    if r >= 1.0 {
        return Err(BesselError::LimitPointNoCondition(-0.25 + r * r));
    }
    if !(r > 0.0) {
        return Err(BesselError::OutOfRange(r));
    }
    let space = SymplecticSpace::standard(1);
    Ok(space.dirichlet())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::{boundary_bracket, BoundaryData};

    #[test]
    fn reparametrization() {
        assert_eq!(q_of_r(0.5).unwrap(), 0.0);
        assert_eq!(q_of_r(0.0).unwrap(), -0.25);
        assert_eq!(q_of_r(-1.0).unwrap(), -1.25);
        assert!(q_of_r(1.0).is_err());
        assert!(r_of_q(0.75).is_err());
        for r in [-3.0, -0.2, 0.0, 0.3, 0.99] {
            assert!((r_of_q(q_of_r(r).unwrap()).unwrap() - r).abs() < 1e-14);
        }
    }

    #[test]
    fn solution_pair_values() {
        let y = singular_solutions(0.5, 1.0);
        assert_eq!((y.y1, y.y2), (1.0, 0.0));
        for r in [-2.0, -0.3, 0.0, 0.25, 0.5, 0.9] {
            for t in [1e-6, 0.01, 0.4, 1.0] {
                let y = singular_solutions(r, t);
                let f = BoundaryData::scalar(y.y1, y.dy1);
                let g = BoundaryData::scalar(y.y2, y.dy2);
                // the two products cancel down to −1, so rounding scales with their size
                let size = (y.dy1 * y.y2).abs() + (y.y1 * y.dy2).abs();
                assert!((boundary_bracket(&f, &g) + 1.0).abs() < 1e-14 * size + 1e-12, "r={r} t={t}");
            }
        }
    }

    #[test]
    fn small_r_approaches_logarithmic_branch() {
        let t = 0.3;
        let a = singular_solutions(1e-7, t);
        let b = singular_solutions(0.0, t);
        assert!((a.y1 - b.y1).abs() < 1e-6 && (a.y2 - b.y2).abs() < 1e-6);
    }

    #[test]
    fn zero_sequences() {
        let q = -0.25 - std::f64::consts::PI.powi(2);
        let z = zero_sequence(q, ((-4.0f64).exp(), 1.0)).unwrap();
        assert_eq!(z.len(), 3);
        for (k, t) in z.iter().enumerate() {
            assert!((t / (-(k as f64 + 1.0)).exp() - 1.0).abs() < 1e-14);
        }
        assert!(zero_sequence(-0.26, (0.9, 1.0)).unwrap().is_empty());
        assert!(zero_sequence(0.0, (0.1, 1.0)).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = classify(&BesselMatrixProblem::constant(DMatrix::zeros(1, 1), BesselEnd::ZeroEnd)).unwrap();
        assert_eq!(c.overall, MorseClass::FiniteMorse);
        assert_eq!(c.fredholm, Some(true));
        let c =
            classify(&BesselMatrixProblem::constant(DMatrix::from_element(1, 1, -0.5), BesselEnd::ZeroEnd)).unwrap();
        assert_eq!(c.overall, MorseClass::InfiniteMorse);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let c = classify(&BesselMatrixProblem::constant(d, BesselEnd::InfinityEnd)).unwrap();
        let verdicts: Vec<_> = c.directions.iter().map(|d| d.verdict).collect();
        assert!(verdicts.contains(&MorseClass::FiniteMorse) && verdicts.contains(&MorseClass::InfiniteMorse));
        assert_eq!(c.overall, MorseClass::InfiniteMorse);
        let c =
            classify(&BesselMatrixProblem::constant(DMatrix::from_element(1, 1, -0.25), BesselEnd::ZeroEnd)).unwrap();
        assert_eq!(c.overall, MorseClass::Threshold);
        let bare = BesselMatrixProblem::new(1, BesselEnd::ZeroEnd, |_| DMatrix::zeros(1, 1));
        assert_eq!(classify(&bare), Err(BesselError::TailModelMissing));
    }

    #[test]
    fn friedrichs_line_selects_the_principal_branch() {
        let r = 0.5;
        let frame = friedrichs_trace_frame(r).unwrap();
        let t = 1e-8;
        let [(p1, x1), (p2, x2)] = trace_basis(r, t);
        let u1 = BoundaryData::scalar(x1, p1);
        let u2 = BoundaryData::scalar(x2, p2);
        let trace =
            |f: &BoundaryData| nalgebra::DVector::from_vec(vec![-boundary_bracket(f, &u1), -boundary_bracket(f, &u2)]);
        // t^{1/2+r} = t passes, t^{1/2−r} = 1 fails
        assert!(frame.contains(&trace(&BoundaryData::scalar(t, 1.0)), 1e-12));
        assert!(!frame.contains(&trace(&BoundaryData::scalar(1.0, 0.0)), 1e-3));
        assert!(friedrichs_trace_frame(1.0).is_err());
        assert!(frame.isotropy_defect() == 0.0);
    }
}
