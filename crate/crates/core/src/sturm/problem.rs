//! Sturm–Liouville problems `l x = −(P x' + Q x)' + Qᵀ x' + R x` and their Hamiltonian form.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SlError;

/// Matrix-valued coefficients `P`, `Q`, `R` of a Sturm–Liouville operator.
pub trait Coefficients: Send + Sync {
    fn dim(&self) -> usize;
    fn p(&self, t: f64) -> DMatrix<f64>;
    fn q(&self, t: f64) -> DMatrix<f64>;
    fn r(&self, t: f64) -> DMatrix<f64>;
}

type MatFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Coefficients given by closures.
#[derive(Clone)]
pub struct Builtin {
    dim: usize,
    p: MatFn,
    q: MatFn,
    r: MatFn,
}

impl Builtin {
    pub fn new(
        dim: usize,
        p: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        q: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        r: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, p: Arc::new(p), q: Arc::new(q), r: Arc::new(r) }
    }

    /// `P = I`, `Q = 0` and the given potential.
    pub fn schrodinger(dim: usize, r: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::new(dim, move |_| DMatrix::identity(dim, dim), move |_| DMatrix::zeros(dim, dim), r)
    }
}

impl Coefficients for Builtin {
    fn dim(&self) -> usize {
        self.dim
    }
    fn p(&self, t: f64) -> DMatrix<f64> {
        (self.p)(t)
    }
    fn q(&self, t: f64) -> DMatrix<f64> {
        (self.q)(t)
    }
    fn r(&self, t: f64) -> DMatrix<f64> {
        (self.r)(t)
    }
}

/// Coefficients that are matrix polynomials `Σ A_k t^k`.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub r: Vec<DMatrix<f64>>,
}

fn horner(c: &[DMatrix<f64>], t: f64, n: usize) -> DMatrix<f64> {
    c.iter().rev().fold(DMatrix::zeros(n, n), |acc, a| acc * t + a)
}

impl Coefficients for Polynomial {
    fn dim(&self) -> usize {
        self.p.first().map(|m| m.nrows()).unwrap_or(0)
    }
    fn p(&self, t: f64) -> DMatrix<f64> {
        horner(&self.p, t, self.dim())
    }
    fn q(&self, t: f64) -> DMatrix<f64> {
        horner(&self.q, t, self.dim())
    }
    fn r(&self, t: f64) -> DMatrix<f64> {
        horner(&self.r, t, self.dim())
    }
}

/// Natural cubic spline through `(t_k, y_k)`.
#[derive(Clone, Debug)]
struct Spline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(t: &[f64], y: &[f64]) -> Self {
        let n = t.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the second derivatives, natural ends
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut sup = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[i] = 2.0 * (h0 + h1);
                sup[i] = h1;
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                if i > 1 {
                    let w = h0 / diag[i - 1];
                    diag[i] -= w * sup[i - 1];
                    rhs[i] -= w * rhs[i - 1];
                }
            }
            for i in (1..n - 1).rev() {
                m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
            }
        }
        Self { t: t.to_vec(), y: y.to_vec(), m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let k = match self.t.partition_point(|&s| s <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let a = (t1 - x) / h;
        let b = (x - t0) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

/// Coefficients sampled on a grid and interpolated entrywise by natural cubic splines.
#[derive(Clone, Debug)]
pub struct GridSampled {
    dim: usize,
    p: Vec<Spline>,
    q: Vec<Spline>,
    r: Vec<Spline>,
}

impl GridSampled {
    /// `samples[k] = (t_k, P(t_k), Q(t_k), R(t_k))` with strictly increasing `t_k`.
    pub fn new(samples: &[(f64, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)]) -> Result<Self, SlError> {
        if samples.len() < 2 {
            return Err(SlError::Coefficients("need at least two grid rows".into()));
        }
        let dim = samples[0].1.nrows();
        let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SlError::Coefficients("grid must be strictly increasing".into()));
        }
        let build = |pick: &dyn Fn(&(f64, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)) -> &DMatrix<f64>| {
            (0..dim * dim)
                .map(|e| {
                    let y: Vec<f64> = samples.iter().map(|s| pick(s)[(e / dim, e % dim)]).collect();
                    Spline::new(&t, &y)
                })
                .collect::<Vec<_>>()
        };
        Ok(Self { dim, p: build(&|s| &s.1), q: build(&|s| &s.2), r: build(&|s| &s.3) })
    }

    /// Reads a CSV with header `t, P_11.., Q_11.., R_11..` (row-major entries).
    pub fn from_csv(path: &Path) -> Result<Self, SlError> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| SlError::Coefficients(e.to_string()))?;
        let headers = rdr.headers().map_err(|e| SlError::Coefficients(e.to_string()))?.clone();
        let per = (headers.len().saturating_sub(1)) / 3;
        let dim = (per as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim * 3 + 1 != headers.len() {
            return Err(SlError::Coefficients(format!("expected 1 + 3n² columns, found {}", headers.len())));
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| SlError::Coefficients(e.to_string()))?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| SlError::Coefficients(e.to_string()))?;
            let block = |k: usize| DMatrix::from_row_slice(dim, dim, &vals[1 + k * per..1 + (k + 1) * per]);
            samples.push((vals[0], block(0), block(1), block(2)));
        }
        Self::new(&samples)
    }

    /// First and last grid abscissa.
    pub fn span(&self) -> (f64, f64) {
        let t = &self.p[0].t;
        (t[0], t[t.len() - 1])
    }

    fn eval(&self, s: &[Spline], t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| s[i * self.dim + j].eval(t))
    }
}

impl Coefficients for GridSampled {
    fn dim(&self) -> usize {
        self.dim
    }
    fn p(&self, t: f64) -> DMatrix<f64> {
        self.eval(&self.p, t)
    }
    fn q(&self, t: f64) -> DMatrix<f64> {
        self.eval(&self.q, t)
    }
    fn r(&self, t: f64) -> DMatrix<f64> {
        self.eval(&self.r, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Regular,
    SingularLimitPoint,
    SingularLimitCircle,
    Unknown,
}

impl EndpointKind {
    pub fn is_singular(&self) -> bool {
        !matches!(self, EndpointKind::Regular)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

/// Built-in problems with closed-form oracles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CatalogEntry {
    Free,
    Harmonic {
        omega: f64,
    },
    Bessel {
        q: f64,
    },
    Mathieu {
        a: f64,
        q: f64,
    },
    /// `−x'' + B̃ x / β(t)^k` for the limiting N-body variational equation.
    NbodyAsymptotic {
        config: String,
        motion: String,
    },
}

type PerturbFn = Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>;

/// A Sturm–Liouville problem on an interval with endpoint classification.
#[derive(Clone)]
pub struct SlProblem {
    interval: (f64, f64),
    left: EndpointKind,
    right: EndpointKind,
    coeffs: Arc<dyn Coefficients>,
    perturbation: Option<PerturbFn>,
    catalog: Option<CatalogEntry>,
    label: String,
}

impl fmt::Debug for SlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlProblem")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("interval", &self.interval)
            .field("left", &self.left)
            .field("right", &self.right)
            .finish()
    }
}

impl SlProblem {
    pub fn new(coeffs: impl Coefficients + 'static, interval: (f64, f64)) -> Self {
        Self::from_arc(Arc::new(coeffs), interval)
    }

    pub fn from_arc(coeffs: Arc<dyn Coefficients>, interval: (f64, f64)) -> Self {
        let kind = |e: f64| {
            if e.is_finite() {
                EndpointKind::Regular
            } else {
                EndpointKind::Unknown
            }
        };
        Self {
            interval,
            left: kind(interval.0),
            right: kind(interval.1),
            coeffs,
            perturbation: None,
            catalog: None,
            label: "custom".into(),
        }
    }

    pub fn with_endpoints(mut self, left: EndpointKind, right: EndpointKind) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn with_catalog(mut self, entry: CatalogEntry) -> Self {
        self.catalog = Some(entry);
        self
    }

    /// Adds a parameter family `R + C(s, ·)`; `C(0, ·)` must vanish.
    pub fn with_perturbation(mut self, c: impl Fn(f64, f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.perturbation = Some(Arc::new(c));
        self
    }

    /// The same coefficients on another interval; endpoint kinds are kept where the end is kept.
    pub fn restricted(&self, interval: (f64, f64)) -> Self {
        let mut out = self.clone();
        if interval.0 != self.interval.0 {
            out.left = EndpointKind::Regular;
        }
        if interval.1 != self.interval.1 {
            out.right = EndpointKind::Regular;
        }
        out.interval = interval;
        out
    }

    /// The member `R + C(s, ·)` of the perturbation family.
    pub fn at_parameter(&self, s: f64) -> Self {
        let mut out = self.clone();
        if let Some(c) = &self.perturbation {
            let base = self.coeffs.clone();
            let c = c.clone();
            let dim = self.dim();
            out.coeffs = Arc::new(Builtin::new(
                dim,
                {
                    let b = base.clone();
                    move |t| b.p(t)
                },
                {
                    let b = base.clone();
                    move |t| b.q(t)
                },
                move |t| base.r(t) + c(s, t),
            ));
            out.perturbation = None;
            out.catalog = None;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn endpoint_kind(&self, end: Endpoint) -> EndpointKind {
        match end {
            Endpoint::Left => self.left,
            Endpoint::Right => self.right,
        }
    }

    pub fn is_regular(&self) -> bool {
        !self.left.is_singular() && !self.right.is_singular() && self.interval.1.is_finite()
    }

    pub fn catalog(&self) -> Option<&CatalogEntry> {
        self.catalog.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coefficients(&self) -> &Arc<dyn Coefficients> {
        &self.coeffs
    }

    pub fn p(&self, t: f64) -> DMatrix<f64> {
        self.coeffs.p(t)
    }

    pub fn q(&self, t: f64) -> DMatrix<f64> {
        self.coeffs.q(t)
    }

    pub fn r(&self, t: f64) -> DMatrix<f64> {
        self.coeffs.r(t)
    }

    /// `H(t) = [[−P⁻¹, P⁻¹Q], [QᵀP⁻¹, R − QᵀP⁻¹Q]]`, so that `ż = J H z` for `z = (x^{[1]}, x)`.
    pub fn hamiltonian(&self, t: f64) -> Result<DMatrix<f64>, SlError> {
        let n = self.dim();
        let (pinv, q, r) = self.blocks(t)?;
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        let pq = &pinv * &q;
        h.view_mut((0, 0), (n, n)).copy_from(&(-&pinv));
        h.view_mut((0, n), (n, n)).copy_from(&pq);
        h.view_mut((n, 0), (n, n)).copy_from(&pq.transpose());
        h.view_mut((n, n), (n, n)).copy_from(&(r - q.transpose() * &pq));
        Ok(h)
    }

    /// `A(t) = J H(t)`: `p' = QᵀP⁻¹(p − Qx) + R x`, `x' = P⁻¹(p − Qx)`.
    pub fn system_matrix(&self, t: f64) -> Result<DMatrix<f64>, SlError> {
        let n = self.dim();
        let (pinv, q, r) = self.blocks(t)?;
        let qtp = q.transpose() * &pinv;
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, 0), (n, n)).copy_from(&qtp);
        a.view_mut((0, n), (n, n)).copy_from(&(r - &qtp * &q));
        a.view_mut((n, 0), (n, n)).copy_from(&pinv);
        a.view_mut((n, n), (n, n)).copy_from(&(-(&pinv * &q)));
        Ok(a)
    }

    fn blocks(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>), SlError> {
        let p = self.p(t);
        let pinv = p.clone().try_inverse().ok_or(SlError::CoefficientSingular(t))?;
        if !pinv.iter().all(|v| v.is_finite()) {
            return Err(SlError::CoefficientSingular(t));
        }
        let r = self.r(t);
        if !r.iter().all(|v| v.is_finite()) {
            return Err(SlError::CoefficientSingular(t));
        }
        Ok((pinv, self.q(t), r))
    }
}

/// First-order field `(t, z) ↦ J H(t) z` of a problem.
pub fn to_hamiltonian(problem: &SlProblem) -> impl Fn(f64) -> Result<DMatrix<f64>, SlError> + '_ {
    move |t| problem.system_matrix(t)
}
