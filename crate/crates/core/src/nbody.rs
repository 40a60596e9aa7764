//! Newtonian N-body potential, central configurations, and the Morse index of asymptotic motions.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::{self, BesselEnd, BesselMatrixProblem, MorseClass};
use crate::linalg;
use crate::report::{Assumption, AssumptionStatus, IndexReport, Verdict};
use crate::sturm::{morse_index_dirichlet, Builtin, CatalogEntry, EndpointKind, SlProblem, DEFAULT_SCHEDULE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NbodyError {
    #[error("bodies {0} and {1} collide")]
    CollisionConfiguration(usize, usize),
    #[error("central configuration solver diverged (residual {0:.3e})")]
    SolverDiverged(f64),
    #[error("central configuration solver ran into a collision")]
    ConvergedToCollision,
    #[error("configuration is not normalized: I = {0}")]
    NotNormalized(f64),
    #[error("masses must be positive")]
    NonPositiveMass,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown seed `{0}`")]
    UnknownSeed(String),
    #[error("unknown motion `{0}` (collision, parabolic, hyperbolic)")]
    UnknownMotion(String),
    #[error("input: {0}")]
    Input(String),
    #[error("index computation: {0}")]
    Index(String),
}

/// Masses `mᵢ` in ambient dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    pub masses: Vec<f64>,
    pub dimension: usize,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>, dimension: usize) -> Result<Self, NbodyError> {
        if masses.is_empty() || masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(NbodyError::NonPositiveMass);
        }
        if !(1..=3).contains(&dimension) {
            return Err(NbodyError::DimensionMismatch(format!("dimension {dimension}")));
        }
        Ok(Self { masses, dimension })
    }

    pub fn n_bodies(&self) -> usize {
        self.masses.len()
    }

    /// `M = diag(mᵢ I_d)` as its diagonal.
    pub fn mass_diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.masses.len() * self.dimension,
            self.masses.iter().flat_map(|&m| std::iter::repeat(m).take(self.dimension)),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub system: MassSystem,
    /// Stacked positions `(q₁, …, q_N)`.
    pub positions: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    masses: Vec<f64>,
    positions: Vec<Vec<f64>>,
    dimension: usize,
}

impl Configuration {
    pub fn new(system: MassSystem, positions: DVector<f64>) -> Result<Self, NbodyError> {
        if positions.len() != system.n_bodies() * system.dimension {
            return Err(NbodyError::DimensionMismatch(format!(
                "{} coordinates for {} bodies in dimension {}",
                positions.len(),
                system.n_bodies(),
                system.dimension
            )));
        }
        Ok(Self { system, positions })
    }

    pub fn from_json(text: &str) -> Result<Self, NbodyError> {
        let f: ConfigFile = serde_json::from_str(text).map_err(|e| NbodyError::Input(e.to_string()))?;
        let system = MassSystem::new(f.masses, f.dimension)?;
        if f.positions.len() != system.n_bodies() || f.positions.iter().any(|p| p.len() != f.dimension) {
            return Err(NbodyError::DimensionMismatch("positions must be one point per mass".into()));
        }
        Self::new(system, DVector::from_iterator(f.positions.len() * f.dimension, f.positions.into_iter().flatten()))
    }

    pub fn from_file(path: &Path) -> Result<Self, NbodyError> {
        let text = std::fs::read_to_string(path).map_err(|e| NbodyError::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let d = self.system.dimension;
        let f = ConfigFile {
            masses: self.system.masses.clone(),
            positions: (0..self.system.n_bodies()).map(|i| self.body(i).iter().copied().collect()).collect(),
            dimension: d,
        };
        serde_json::to_string_pretty(&f).expect("plain data serializes")
    }

    pub fn body(&self, i: usize) -> DVector<f64> {
        let d = self.system.dimension;
        self.positions.rows(i * d, d).into_owned()
    }

    fn with_positions(&self, positions: DVector<f64>) -> Self {
        Self { system: self.system.clone(), positions }
    }

    pub fn center_of_mass(&self) -> DVector<f64> {
        let d = self.system.dimension;
        let total: f64 = self.system.masses.iter().sum();
        let mut c = DVector::zeros(d);
        for (i, &m) in self.system.masses.iter().enumerate() {
            c += self.body(i) * m;
        }
        c / total
    }

    pub fn centered(&self) -> Self {
        let c = self.center_of_mass();
        let d = self.system.dimension;
        let mut q = self.positions.clone();
        for i in 0..self.system.n_bodies() {
            let mut b = q.rows_mut(i * d, d);
            b -= &c;
        }
        self.with_positions(q)
    }

    /// `I(q) = ⟨Mq, q⟩`.
    pub fn moment_of_inertia(&self) -> f64 {
        self.system.mass_diagonal().component_mul(&self.positions).dot(&self.positions)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_positions(&self.positions * factor)
    }

    fn pairs(&self) -> Result<Vec<(usize, usize, DVector<f64>, f64)>, NbodyError> {
        let n = self.system.n_bodies();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let diff = self.body(i) - self.body(j);
                let r = diff.norm();
                if !(r > 1e-300) {
                    return Err(NbodyError::CollisionConfiguration(i, j));
                }
                out.push((i, j, diff, r));
            }
        }
        Ok(out)
    }
}

/// `U = Σ_{i<j} mᵢmⱼ / |qᵢ − qⱼ|`.
pub fn potential(config: &Configuration) -> Result<f64, NbodyError> {
    let m = &config.system.masses;
    Ok(config.pairs()?.iter().map(|(i, j, _, r)| m[*i] * m[*j] / r).sum())
}

pub fn gradient(config: &Configuration) -> Result<DVector<f64>, NbodyError> {
    let d = config.system.dimension;
    let m = &config.system.masses;
    let mut g = DVector::zeros(config.positions.len());
    for (i, j, diff, r) in config.pairs()? {
        let f = diff * (m[i] * m[j] / r.powi(3));
        let mut gi = g.rows_mut(i * d, d);
        gi -= &f;
        let mut gj = g.rows_mut(j * d, d);
        gj += &f;
    }
    Ok(g)
}

/// `D²U` with off-diagonal blocks `mᵢmⱼ r⁻³ (I − 3uuᵀ)` and row sums zero.
pub fn hessian(config: &Configuration) -> Result<DMatrix<f64>, NbodyError> {
    let d = config.system.dimension;
    let m = &config.system.masses;
    let size = config.positions.len();
    let mut h = DMatrix::zeros(size, size);
    for (i, j, diff, r) in config.pairs()? {
        let u = &diff / r;
        let block = (DMatrix::identity(d, d) - &u * u.transpose() * 3.0) * (m[i] * m[j] / r.powi(3));
        h.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        h.view_mut((j * d, i * d), (d, d)).copy_from(&block);
        let mut hii = h.view_mut((i * d, i * d), (d, d));
        hii -= &block;
        let mut hjj = h.view_mut((j * d, j * d), (d, d));
        hjj -= &block;
    }
    Ok(h)
}

/// A solution of `∇U(s) + U(s) M s = 0`; such solutions have `I(s) = 1` automatically.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralConfig {
    pub config: Configuration,
    pub normalized: bool,
    pub residual: f64,
}

fn cc_residual(config: &Configuration) -> Result<DVector<f64>, NbodyError> {
    let mq = config.system.mass_diagonal().component_mul(&config.positions);
    Ok(gradient(config)? + mq * potential(config)?)
}

/// Damped Newton iteration on `∇U + U M q = 0` in the center-of-mass frame.
///
/// The Jacobian `D²U + Mq ∇Uᵀ + U M` is singular along rotations, so steps use its
/// pseudo-inverse.
pub fn central_configuration(initial: &Configuration, tol: f64) -> Result<CentralConfig, NbodyError> {
    let mut q = initial.centered();
    let i0 = q.moment_of_inertia();
    if !(i0 > 0.0) {
        return Err(NbodyError::NotNormalized(i0));
    }
    q = q.scaled(i0.sqrt().recip());
    let md = q.system.mass_diagonal();
    let mut res = cc_residual(&q)?;
    for _ in 0..200 {
        let norm = res.norm();
        if norm <= tol {
            return Ok(CentralConfig {
                normalized: (q.moment_of_inertia() - 1.0).abs() < 1e-9,
                residual: norm,
                config: q,
            });
        }
        let grad = gradient(&q)?;
        let u = potential(&q)?;
        let mq = md.component_mul(&q.positions);
        let jac = hessian(&q)? + &mq * grad.transpose() + DMatrix::from_diagonal(&md) * u;
        let step = linalg::pseudo_inverse(&jac, 1e-10 * linalg::max_abs(&hessian(&q)?).max(1.0)) * &res;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-8 {
            let trial = q.with_positions(&q.positions - &step * lambda).centered();
            match cc_residual(&trial) {
                Ok(r) if r.norm() < norm => {
                    q = trial;
                    res = r;
                    accepted = true;
                    break;
                }
                Err(NbodyError::CollisionConfiguration(..)) if lambda < 1e-6 => {
                    return Err(NbodyError::ConvergedToCollision)
                }
                _ => lambda *= 0.5,
            }
        }
        if !accepted {
            return Err(NbodyError::SolverDiverged(norm));
        }
        if min_distance(&q) < 1e-8 {
            return Err(NbodyError::ConvergedToCollision);
        }
    }
    Err(NbodyError::SolverDiverged(res.norm()))
}

fn min_distance(config: &Configuration) -> f64 {
    config.pairs().map(|p| p.iter().map(|x| x.3).fold(f64::INFINITY, f64::min)).unwrap_or(0.0)
}

/// Built-in seeds: `two-body`, `lagrange`, `euler`, `square`, all with unit masses in the plane.
pub fn seed(name: &str) -> Result<Configuration, NbodyError> {
    let (masses, pts): (Vec<f64>, Vec<[f64; 2]>) = match name {
        "two-body" | "two_body" | "2body" => (vec![1.0; 2], vec![[-0.6, 0.05], [0.6, -0.05]]),
        "lagrange" | "equilateral" => {
            let h = 3f64.sqrt() / 2.0;
            (vec![1.0; 3], vec![[0.0, 0.62], [-h * 1.05, -0.5], [h, -0.48]])
        }
        "euler" | "collinear" => (vec![1.0; 3], vec![[-1.1, 0.0], [0.05, 0.0], [1.0, 0.0]]),
        "square" => (vec![1.0; 4], vec![[1.0, 1.02], [-1.0, 1.0], [-0.98, -1.0], [1.0, -1.0]]),
        other => return Err(NbodyError::UnknownSeed(other.to_string())),
    };
    let system = MassSystem::new(masses, 2)?;
    Configuration::new(system, DVector::from_iterator(pts.len() * 2, pts.into_iter().flatten()))
}

/// Resolves a seed name or a JSON file and solves for the nearby central configuration.
pub fn resolve_config(spec: &str) -> Result<CentralConfig, NbodyError> {
    let initial = match seed(spec) {
        Ok(c) => c,
        Err(NbodyError::UnknownSeed(_)) if Path::new(spec).exists() => Configuration::from_file(Path::new(spec))?,
        Err(e) => return Err(e),
    };
    central_configuration(&initial, 1e-12)
}

/// `M^{-1/2} D²U M^{-1/2}`, symmetric and similar to `M⁻¹D²U`.
fn mass_weighted_hessian(config: &Configuration) -> Result<DMatrix<f64>, NbodyError> {
    let w = config.system.mass_diagonal().map(|m| m.sqrt().recip());
    let h = hessian(config)?;
    let mut out = h;
    for i in 0..w.len() {
        for j in 0..w.len() {
            out[(i, j)] *= w[i] * w[j];
        }
    }
    Ok(linalg::symmetrize(&out))
}

/// The symmetric form of `B̄(a) = (2/9) M⁻¹D²U(a) / U(a)`.
pub fn bbar_matrix(cc: &CentralConfig) -> Result<DMatrix<f64>, NbodyError> {
    let i = cc.config.moment_of_inertia();
    if (i - 1.0).abs() > 1e-8 {
        return Err(NbodyError::NotNormalized(i));
    }
    Ok(mass_weighted_hessian(&cc.config)? * (2.0 / 9.0 / potential(&cc.config)?))
}

/// Eigenvalues of `B̄(a)`, ascending.
pub fn bbar_spectrum(cc: &CentralConfig) -> Result<Vec<f64>, NbodyError> {
    Ok(linalg::sym_eigenvalues(&bbar_matrix(cc)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    TotalCollision,
    ParabolicInfinity,
    HyperbolicInfinity,
}

impl std::str::FromStr for Motion {
    type Err = NbodyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "collision" | "total-collision" => Ok(Motion::TotalCollision),
            "parabolic" | "parabolic-infinity" => Ok(Motion::ParabolicInfinity),
            "hyperbolic" | "hyperbolic-infinity" => Ok(Motion::HyperbolicInfinity),
            other => Err(NbodyError::UnknownMotion(other.to_string())),
        }
    }
}

impl Motion {
    pub fn name(&self) -> &'static str {
        match self {
            Motion::TotalCollision => "collision",
            Motion::ParabolicInfinity => "parabolic",
            Motion::HyperbolicInfinity => "hyperbolic",
        }
    }
}

/// Scalar limiting problem along one eigendirection of `B̄`.
fn direction_problem(lambda: f64, motion: Motion) -> Result<SlProblem, NbodyError> {
    match motion {
        Motion::TotalCollision => {
            crate::sturm::parse_catalog(&format!("bessel({lambda})")).map_err(|e| NbodyError::Index(e.to_string()))
        }
        Motion::ParabolicInfinity => Ok(SlProblem::new(
            Builtin::schrodinger(1, move |t| DMatrix::from_element(1, 1, lambda / (t * t))),
            (1.0, f64::INFINITY),
        )
        .with_endpoints(EndpointKind::Regular, EndpointKind::SingularLimitPoint)),
        Motion::HyperbolicInfinity => Ok(SlProblem::new(
            Builtin::schrodinger(1, move |t| DMatrix::from_element(1, 1, lambda / (t * t * t))),
            (1.0, f64::INFINITY),
        )
        .with_endpoints(EndpointKind::Regular, EndpointKind::SingularLimitPoint)),
    }
}

/// The limiting variational operator `−d²/dt² + B̄/β²` (or `B̄/t³` for hyperbolic motions).
pub fn asymptotic_problem(config: &str, motion: &str) -> Result<SlProblem, NbodyError> {
    let cc = resolve_config(config)?;
    let m: Motion = motion.parse()?;
    let b = bbar_matrix(&cc)?;
    let entry = CatalogEntry::NbodyAsymptotic { config: config.to_string(), motion: m.name().to_string() };
    let problem = match m {
        Motion::TotalCollision => BesselMatrixProblem::constant(b, BesselEnd::ZeroEnd).to_sl_problem(),
        Motion::ParabolicInfinity => BesselMatrixProblem::constant(b, BesselEnd::InfinityEnd).to_sl_problem(),
        Motion::HyperbolicInfinity => {
            let n = b.nrows();
            SlProblem::new(Builtin::schrodinger(n, move |t| &b / (t * t * t)), (1.0, f64::INFINITY))
                .with_endpoints(EndpointKind::Regular, EndpointKind::SingularLimitPoint)
        }
    };
    Ok(problem.with_label(format!("nbody-asymptotic({config},{})", m.name())).with_catalog(entry))
}

pub fn asymptotic_morse(cc: &CentralConfig, motion: Motion) -> Result<IndexReport, NbodyError> {
    let mut report = asymptotic_morse_from_bbar(&bbar_matrix(cc)?, motion)?;
    report.value("cc_residual", cc.residual);
    Ok(report)
}

/// Classification from a given symmetric `B̄`; finite indices are summed over eigendirections.
pub fn asymptotic_morse_from_bbar(bbar: &DMatrix<f64>, motion: Motion) -> Result<IndexReport, NbodyError> {
    let eigs = linalg::sym_eigenvalues(&linalg::symmetrize(bbar));
    let mut report = IndexReport::new("nbody_asymptotic", Verdict::Infinite);
    report.assumptions.push(Assumption::new(
        "asymptotics",
        AssumptionStatus::Assumed,
        "the motion is asymptotic to a homothetic motion of the given central configuration",
    ));
    for (k, e) in eigs.iter().enumerate() {
        report.value(&format!("bbar_{k}"), *e);
    }
    let end = match motion {
        Motion::TotalCollision => BesselEnd::ZeroEnd,
        _ => BesselEnd::InfinityEnd,
    };
    let class =
        bessel::classify(&BesselMatrixProblem::constant(DMatrix::from_diagonal(&DVector::from_vec(eigs.clone())), end))
            .map_err(|e| NbodyError::Index(e.to_string()))?;
    let overall = if motion == Motion::HyperbolicInfinity {
        report.note("hyperbolic motions have finite Morse index; the count below is a truncated diagnostic");
        MorseClass::FiniteMorse
    } else {
        class.overall
    };
    match overall {
        MorseClass::InfiniteMorse => {
            report.verdict = Verdict::Infinite;
            return Ok(report);
        }
        MorseClass::Threshold => {
            report.verdict = Verdict::Undetermined { reason: "an eigenvalue of B̄ sits at −1/4".into() };
            return Ok(report);
        }
        MorseClass::FiniteMorse => {}
    }
    let mut cache: Vec<(f64, i64)> = Vec::new();
    let mut total = 0i64;
    for &e in &eigs {
        let count = match cache.iter().find(|(v, _)| (v - e).abs() <= 1e-12 * (1.0 + e.abs())) {
            Some(&(_, c)) => c,
            None => {
                let rep = morse_index_dirichlet(&direction_problem(e, motion)?, &DEFAULT_SCHEDULE)
                    .map_err(|err| NbodyError::Index(err.to_string()))?;
                let c = match (&rep.verdict, motion) {
                    (Verdict::Finite { value }, _) => *value,
                    (_, Motion::HyperbolicInfinity) => rep.diagnostics.delta_trace.last().map(|d| d.count).unwrap_or(0),
                    (v, _) => {
                        report.verdict = v.clone();
                        report.note(format!("direction with eigenvalue {e} did not stabilize"));
                        return Ok(report);
                    }
                };
                cache.push((e, c));
                c
            }
        };
        total += count;
    }
    report.verdict = Verdict::Finite { value: total };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, d: usize, pts: &[f64]) -> Configuration {
        Configuration::new(MassSystem::new(vec![1.0; n], d).unwrap(), DVector::from_column_slice(pts)).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential(&unit(2, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0])).unwrap(), 1.0);
        let h = 3f64.sqrt() / 2.0;
        let tri = unit(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.5, h]);
        assert!((potential(&tri).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(potential(&unit(2, 2, &[1.0, 1.0, 1.0, 1.0])), Err(NbodyError::CollisionConfiguration(0, 1)));
    }

    #[test]
    fn two_body_block() {
        let c = unit(2, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let h = hessian(&c).unwrap();
        let block = h.view((0, 3), (3, 3)).into_owned();
        let ev = linalg::sym_eigenvalues(&block);
        assert!((ev[0] + 2.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14 && (ev[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equal_mass_central_configurations() {
        let cc = central_configuration(&seed("two-body").unwrap(), 1e-12).unwrap();
        assert!(cc.residual <= 1e-12 && cc.normalized);
        let r = (cc.config.body(0) - cc.config.body(1)).norm();
        assert!((r - 2f64.sqrt()).abs() < 1e-10);

        let lagrange = central_configuration(&seed("lagrange").unwrap(), 1e-12).unwrap();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert!(((lagrange.config.body(i) - lagrange.config.body(j)).norm() - 1.0).abs() < 1e-10);
        }
        let euler = central_configuration(&seed("euler").unwrap(), 1e-12).unwrap();
        let xs: Vec<f64> = (0..3).map(|i| euler.config.body(i)[0]).collect();
        // outer bodies at ±1/√2 with the middle one at the center
        assert!((xs[2] - xs[0] - 2f64.sqrt()).abs() < 1e-10 && xs[1].abs() < 1e-10);
    }

    #[test]
    fn two_body_bbar() {
        let cc = central_configuration(&seed("two-body").unwrap(), 1e-12).unwrap();
        let ev = bbar_spectrum(&cc).unwrap();
        let want = [-2.0 / 9.0, 0.0, 0.0, 4.0 / 9.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn motion_parsing() {
        assert_eq!("collision".parse::<Motion>().unwrap(), Motion::TotalCollision);
        assert_eq!("Hyperbolic".parse::<Motion>().unwrap(), Motion::HyperbolicInfinity);
        assert!("elliptic".parse::<Motion>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = seed("square").unwrap();
        let back = Configuration::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(Configuration::from_json(r#"{"masses":[1,-1],"positions":[[0,0],[1,0]],"dimension":2}"#).is_err());
    }
}
