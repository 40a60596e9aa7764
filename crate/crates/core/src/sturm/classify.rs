//! Weyl classification of endpoints by square-integrability of solutions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::integrate::{fundamental_solution, IntegratorOptions};
use super::problem::{CatalogEntry, Endpoint, SlProblem};
use super::SlError;
use crate::bessel::LIMIT_POINT_Q;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointClass {
    Regular,
    LimitCircle,
    LimitPoint,
}

/// Cutoff doublings toward the endpoint.
const LADDER: usize = 40;
/// Successive tail increments shrinking faster than this ratio are summable.
const SUMMABLE: f64 = 0.97;

pub fn endpoint_classify(problem: &SlProblem, end: Endpoint) -> Result<EndpointClass, SlError> {
    if let Some(CatalogEntry::Bessel { q }) = problem.catalog() {
        return Ok(match end {
            Endpoint::Left if *q >= LIMIT_POINT_Q => EndpointClass::LimitPoint,
            Endpoint::Left => EndpointClass::LimitCircle,
            Endpoint::Right => EndpointClass::Regular,
        });
    }
    let (a, b) = problem.interval();
    let e = match end {
        Endpoint::Left => a,
        Endpoint::Right => b,
    };
    if e.is_finite() && extends_regularly(problem, e, a, b) {
        return Ok(EndpointClass::Regular);
    }
    tail_test(problem, end)
}

fn extends_regularly(problem: &SlProblem, e: f64, a: f64, b: f64) -> bool {
    let inward = if e == a { 1.0 } else { -1.0 };
    let len = if (b - a).is_finite() { b - a } else { 1.0 };
    let probes = [e, e + inward * 1e-9 * len, e + inward * 1e-6 * len];
    let mats: Vec<_> = probes.iter().map(|&t| problem.system_matrix(t)).collect();
    if mats.iter().any(|m| m.as_ref().map(|m| !m.iter().all(|v| v.is_finite())).unwrap_or(true)) {
        return false;
    }
    let m: Vec<DMatrix<f64>> = mats.into_iter().map(|m| m.unwrap()).collect();
    let scale = 1.0 + linalg::max_abs(&m[2]);
    linalg::max_abs(&(&m[0] - &m[2])) <= 1e-3 * scale
}

/// Counts square-integrable solution directions from the growth of `∫ XᵀX` over a geometric ladder.
fn tail_test(problem: &SlProblem, end: Endpoint) -> Result<EndpointClass, SlError> {
    let (a, b) = problem.interval();
    let n = problem.dim();
    let (c, cutoffs): (f64, Vec<f64>) = match end {
        Endpoint::Left => {
            let c = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
            (c, (1..=LADDER).map(|k| a + (c - a) * 0.5f64.powi(k as i32)).collect())
        }
        Endpoint::Right if b.is_finite() => {
            let c = if a.is_finite() { 0.5 * (a + b) } else { b - 1.0 };
            (c, (1..=LADDER).map(|k| b - (b - c) * 0.5f64.powi(k as i32)).collect())
        }
        Endpoint::Right => {
            let c = if a.is_finite() { a + 1.0 } else { 1.0 };
            let base = c.abs().max(1.0);
            (c, (1..=LADDER / 2).map(|k| c + base * (2f64.powi(k as i32) - 1.0)).collect())
        }
    };
    let far = *cutoffs.last().unwrap();
    let span = if far < c { (far, c) } else { (c, far) };
    let fs = fundamental_solution(problem, c, span, &IntegratorOptions::default())?;
    // cumulative Gram matrices of the position rows over [c, cutoff_k]
    let mut gram = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut prev = c;
    let mut eig: Vec<Vec<f64>> = Vec::with_capacity(cutoffs.len());
    for &t in &cutoffs {
        gram += window_gram(&fs, prev, t, n);
        eig.push(linalg::sym_eigenvalues(&gram));
        prev = t;
    }
    let k = eig.len();
    let mut summable = 0;
    for i in 0..2 * n {
        let inc: Vec<f64> = (k - 4..k).map(|j| (eig[j][i] - eig[j - 1][i]).max(0.0)).collect();
        let ratios: Vec<f64> = inc.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
        let negligible = inc.iter().all(|&d| d <= 1e-14 * eig[k - 1][i].abs().max(1e-300));
        if negligible || ratios.iter().all(|&r| r < SUMMABLE) {
            summable += 1;
        } else if ratios.iter().any(|&r| r < SUMMABLE) {
            return Err(SlError::Inconclusive(format!("tail ratios {ratios:?} straddle {SUMMABLE}")));
        }
    }
    Ok(if summable == 2 * n { EndpointClass::LimitCircle } else { EndpointClass::LimitPoint })
}

/// `∫ XᵀX` over one ladder window by Simpson's rule.
fn window_gram(fs: &super::FundamentalSolution, from: f64, to: f64, n: usize) -> DMatrix<f64> {
    let m = 32;
    let h = (to - from) / m as f64;
    let mut acc = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..=m {
        let t = from + h * i as f64;
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let g = fs.gamma(t);
        let x = g.rows(n, n);
        acc += x.transpose() * x * w;
    }
    acc * (h.abs() / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::{catalog, Builtin, EndpointKind};

    fn raw_bessel(q: f64) -> SlProblem {
        SlProblem::new(Builtin::schrodinger(1, move |t| DMatrix::from_element(1, 1, q / (t * t))), (0.0, 1.0))
            .with_endpoints(EndpointKind::Unknown, EndpointKind::Regular)
    }

    #[test]
    fn catalog_answers() {
        let h = catalog::harmonic(3.0);
        assert_eq!(endpoint_classify(&h, Endpoint::Left).unwrap(), EndpointClass::Regular);
        assert_eq!(endpoint_classify(&h, Endpoint::Right).unwrap(), EndpointClass::Regular);
        let b = catalog::bessel_problem(0.0).unwrap();
        assert_eq!(endpoint_classify(&b, Endpoint::Left).unwrap(), EndpointClass::LimitCircle);
        let b = catalog::bessel_problem(2.0).unwrap();
        assert_eq!(endpoint_classify(&b, Endpoint::Left).unwrap(), EndpointClass::LimitPoint);
    }

    #[test]
    fn tail_sums_agree_with_exponents() {
        assert_eq!(endpoint_classify(&raw_bessel(2.0), Endpoint::Left).unwrap(), EndpointClass::LimitPoint);
        assert_eq!(endpoint_classify(&raw_bessel(0.3), Endpoint::Left).unwrap(), EndpointClass::LimitCircle);
        assert_eq!(endpoint_classify(&raw_bessel(-1.0), Endpoint::Left).unwrap(), EndpointClass::LimitCircle);
        assert_eq!(endpoint_classify(&raw_bessel(2.0), Endpoint::Right).unwrap(), EndpointClass::Regular);
    }

    #[test]
    fn free_particle_at_infinity() {
        let p = SlProblem::new(Builtin::schrodinger(1, |_| DMatrix::zeros(1, 1)), (1.0, f64::INFINITY));
        assert_eq!(endpoint_classify(&p, Endpoint::Right).unwrap(), EndpointClass::LimitPoint);
    }
}
