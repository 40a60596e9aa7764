//! Index identities checked on discretized families: the spectral flow formula, ghost
//! eigenvalues of rotating boundary conditions, and the Morse-index jump.

use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::discrete::DiscreteOperator;
use super::flow::{spectral_flow, FlowCell};
use super::{SpectralCount, SpectralError};
use crate::bessel;
use crate::maslov::{maslov_clm, CrossingSummary, LagrangianPath};
use crate::sturm::{fundamental_solution, BoundaryCondition, IntegratorOptions, SlError, SlProblem};
use crate::symplectic::{graph_lagrangian, intersection_dim, LagrangianFrame, SymplecticMatrix, SymplecticSpace};

/// Margin from which the flow cells start looking for a gap around 0.
const FLOW_GAP: f64 = 1.0;

/// The boundary-data Lagrangian of `bc` in `(ℝ^{2n} ⊕ ℝ^{2n}, −Ω ⊕ Ω)`.
pub(crate) fn boundary_frame(bc: &BoundaryCondition, n: usize) -> Result<LagrangianFrame, SpectralError> {
    let std = SymplecticSpace::standard(n);
    match bc {
        BoundaryCondition::Dirichlet => Ok(std.dirichlet().direct_sum(&std.dirichlet())),
        BoundaryCondition::Neumann => Ok(std.neumann().direct_sum(&std.neumann())),
        BoundaryCondition::GeneralLagrangian(f) if f.space() == SymplecticSpace::boundary(n, n) => Ok(f.clone()),
        BoundaryCondition::GeneralLagrangian(_) => {
            Err(SpectralError::BcEliminationSingular("frame is not in the boundary space".into()))
        }
        BoundaryCondition::FriedrichsAtSingular => Err(SpectralError::NotRegular),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfReport {
    pub sf: i64,
    /// `μ^CLM(Λ_s, Graph(M_s))` in the boundary-data space.
    pub maslov: i64,
    pub agree: bool,
    pub cells: Vec<FlowCell>,
    pub crossings: Vec<CrossingSummary>,
}

/// Compares the spectral flow of the discretized family with `−μ^CLM(Λ_s, Graph(M_s))`,
/// where `M_s` is the transfer matrix of the `s`-th problem across its interval.
pub fn verify_sf_formula<P, B>(
    problem_family: P,
    bc_family: B,
    interval: (f64, f64),
    grid: usize,
) -> Result<SfReport, SpectralError>
where
    P: Fn(f64) -> SlProblem + Sync + Send,
    B: Fn(f64) -> BoundaryCondition + Sync + Send,
{
    let p0 = problem_family(interval.0);
    if !p0.is_regular() {
        return Err(SpectralError::NotRegular);
    }
    let n = p0.dim();
    let flow = spectral_flow(|s| DiscreteOperator::new(&problem_family(s), &bc_family(s), grid), interval, FLOW_GAP)?;
    let failure: Mutex<Option<SpectralError>> = Mutex::new(None);
    let graph = |s: f64| -> Result<LagrangianFrame, SpectralError> {
        let p = problem_family(s);
        let (a, b) = p.interval();
        let fs = fundamental_solution(&p, a, (a, b), &IntegratorOptions::default())?;
        let m = SymplecticMatrix::new_unchecked(SymplecticSpace::standard(n), fs.monodromy());
        Ok(graph_lagrangian(&m, 1e-6)?)
    };
    // validate both ends before handing infallible samplers to the scan
    let fallback = graph(interval.0)?;
    graph(interval.1)?;
    boundary_frame(&bc_family(interval.0), n)?;
    let space = SymplecticSpace::boundary(n, n);
    let graph_path = LagrangianPath::new(space, interval, |s| {
        graph(s).unwrap_or_else(|e| {
            failure.lock().unwrap().get_or_insert(e);
            fallback.clone()
        })
    });
    let bc_fallback = boundary_frame(&bc_family(interval.0), n)?;
    let bc_path = LagrangianPath::new(space, interval, |s| {
        boundary_frame(&bc_family(s), n).unwrap_or_else(|e| {
            failure.lock().unwrap().get_or_insert(e);
            bc_fallback.clone()
        })
    });
    let mu = maslov_clm(&bc_path, &graph_path, interval)?;
    if let Some(e) = failure.lock().unwrap().take() {
        return Err(e);
    }
    Ok(SfReport {
        sf: flow.value,
        maslov: mu.index,
        agree: flow.value == -mu.index,
        cells: flow.cells,
        crossings: mu.crossings.iter().map(|c| c.summary()).collect(),
    })
}

type FramePath = Arc<dyn Fn(f64) -> LagrangianFrame + Send + Sync>;

/// A boundary condition rotating away from the Friedrichs condition at the left end.
///
/// Conditions are written in trace coordinates at the left end; `left_trace` maps the left
/// boundary values `(x^{[1]}, x)` of the working problem to those coordinates.
#[derive(Clone)]
pub struct RellichSetup {
    pub problem: SlProblem,
    pub left_trace: DMatrix<f64>,
    pub friedrichs: LagrangianFrame,
    /// `u ↦ Λ_u` with `Λ_0 = Λ_F`.
    pub path: FramePath,
    /// Condition at the (regular) right end.
    pub right: LagrangianFrame,
}

impl RellichSetup {
    /// A regular problem whose Friedrichs condition at the left end is Dirichlet.
    pub fn regular(problem: SlProblem, path: FramePath, right: LagrangianFrame) -> Self {
        let n = problem.dim();
        Self {
            problem,
            left_trace: DMatrix::identity(2 * n, 2 * n),
            friedrichs: SymplecticSpace::standard(n).dirichlet(),
            path,
            right,
        }
    }

    /// The Bessel problem with coupling `q` in the limit-circle range, cut to `(δ, 1]`, Dirichlet at 1.
    pub fn bessel(q: f64, delta: f64, path: FramePath) -> Result<Self, SpectralError> {
        let base = crate::sturm::parse_catalog(&format!("bessel({q})"))?;
        let r = bessel::r_of_q(q).map_err(|e| SlError::Catalog(e.to_string()))?;
        let friedrichs = bessel::friedrichs_trace_frame(r).map_err(|e| SlError::Catalog(e.to_string()))?;
        let [(u1p, u1x), (u2p, u2x)] = bessel::trace_basis(r, delta);
        // component i is −[f, uᵢ] = −uᵢ,ₓ f^{[1]} + uᵢ,ₚ f
        let left_trace = DMatrix::from_row_slice(2, 2, &[-u1x, u1p, -u2x, u2p]);
        let (_, b) = base.interval();
        Ok(Self {
            problem: base.restricted((delta, b)),
            left_trace,
            friedrichs,
            path,
            right: SymplecticSpace::standard(1).dirichlet(),
        })
    }

    /// `u ↦ e^{σuJ} Λ_F`; `σ = +1` is the turn that sends eigenvalues to `−∞`.
    pub fn rotating(friedrichs: &LagrangianFrame, sigma: f64) -> FramePath {
        let f = friedrichs.clone();
        Arc::new(move |u| f.transform(&f.space().rotation(sigma * u)))
    }

    /// The boundary condition of the working problem at parameter `u`.
    pub fn condition(&self, u: f64) -> Result<BoundaryCondition, SpectralError> {
        let inv = self
            .left_trace
            .clone()
            .try_inverse()
            .ok_or_else(|| SpectralError::BcEliminationSingular("trace map is not invertible".into()))?;
        let left = (self.path)(u).transform(&inv);
        let left = LagrangianFrame::orthonormalized(left.space(), left.frame());
        Ok(BoundaryCondition::GeneralLagrangian(left.direct_sum(&self.right)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostSample {
    pub u: f64,
    /// `(M, #{λ < −M})` for each cutoff.
    pub counts: Vec<(f64, usize)>,
    pub bottom: f64,
    /// `μ^CLM(Λ_F, Λ_·)` on `[0, u]`.
    pub prediction: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RellichReport {
    pub samples: Vec<GhostSample>,
    /// The bottom eigenvalue decreases as `u` decreases.
    pub monotone: bool,
}

/// Eigenvalue counts below `−M` for each `u`, against `μ^CLM(Λ_F, Λ_u)`.
pub fn rellich_ghosts(
    setup: &RellichSetup,
    u_values: &[f64],
    cutoffs: &[f64],
    grid: usize,
) -> Result<RellichReport, SpectralError> {
    let u_max = u_values.iter().cloned().fold(0.0, f64::max);
    for k in 1..=64 {
        let u = u_max * k as f64 / 64.0;
        if intersection_dim(&(setup.path)(u), &setup.friedrichs, 1e-10)? > 0 {
            return Err(SpectralError::TransversalityViolated(u));
        }
    }
    // the left end enters the boundary form with −Ω
    let n = setup.problem.dim();
    let left_space = SymplecticSpace::boundary(n, 0);
    let fixed = LagrangianPath::constant(LagrangianFrame::new(left_space, setup.friedrichs.frame().clone())?);
    let path = {
        let p = setup.path.clone();
        LagrangianPath::new(left_space, (0.0, u_max), move |u| {
            LagrangianFrame::orthonormalized(left_space, p(u).frame())
        })
    };
    let mut samples = Vec::with_capacity(u_values.len());
    for &u in u_values {
        if u <= 0.0 || intersection_dim(&(setup.path)(u), &setup.friedrichs, 1e-10)? > 0 {
            return Err(SpectralError::TransversalityViolated(u));
        }
        let op = DiscreteOperator::new(&setup.problem, &setup.condition(u)?, grid)?;
        let counts = cutoffs.iter().map(|&m| (m, op.count_below(-m))).collect();
        let bottom = op.lowest_eigenvalues(1)[0];
        let prediction = maslov_clm(&fixed, &path, (0.0, u))?.index;
        samples.push(GhostSample { u, counts, bottom, prediction });
    }
    let mut by_u: Vec<&GhostSample> = samples.iter().collect();
    by_u.sort_by(|a, b| a.u.total_cmp(&b.u));
    let monotone = by_u.windows(2).all(|w| w[0].bottom < w[1].bottom);
    Ok(RellichReport { samples, monotone })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseJumpReport {
    pub morse_start: i64,
    pub morse_end: i64,
    pub spectral_flow: i64,
    /// `μ^CLM(Λ_F, Λ_s)` in the boundary-data space.
    pub maslov: i64,
    /// `iMor(Λ₁) − iMor(Λ₀) + spfl − μ`.
    pub residual: i64,
}

/// `iMor(Λ₁) − iMor(Λ₀) + spfl(Λ_s) = μ^CLM(Λ_F, Λ_s)` on a regular problem, `Λ_F = Λ_D ⊕ Λ_D`.
pub fn morse_jump_check<B>(
    problem: &SlProblem,
    bc_path: B,
    interval: (f64, f64),
    grid: usize,
) -> Result<MorseJumpReport, SpectralError>
where
    B: Fn(f64) -> LagrangianFrame + Send + Sync,
{
    if !problem.is_regular() {
        return Err(SpectralError::NotRegular);
    }
    let n = problem.dim();
    let at = |s: f64| DiscreteOperator::new(problem, &BoundaryCondition::GeneralLagrangian(bc_path(s)), grid);
    let morse_start = at(interval.0)?.negative_count() as i64;
    let morse_end = at(interval.1)?.negative_count() as i64;
    let flow = spectral_flow(at, interval, FLOW_GAP)?;
    let std = SymplecticSpace::standard(n);
    let friedrichs = LagrangianPath::constant(std.dirichlet().direct_sum(&std.dirichlet()));
    let path = LagrangianPath::new(SymplecticSpace::boundary(n, n), interval, &bc_path);
    let maslov = maslov_clm(&friedrichs, &path, interval)?.index;
    Ok(MorseJumpReport {
        morse_start,
        morse_end,
        spectral_flow: flow.value,
        maslov,
        residual: morse_end - morse_start + flow.value - maslov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::parse_catalog;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn harmonic_family(s: f64) -> SlProblem {
        SlProblem::new(
            crate::sturm::Builtin::schrodinger(1, move |_| DMatrix::from_element(1, 1, -100.0 * s)),
            (0.0, 1.0),
        )
    }

    #[test]
    fn harmonic_sf_formula() {
        let rep = verify_sf_formula(harmonic_family, |_| BoundaryCondition::Dirichlet, (0.0, 1.0), 512).unwrap();
        assert_eq!((rep.sf, rep.maslov), (-3, 3), "{rep:?}");
        assert!(rep.agree);
    }

    #[test]
    fn rotating_end_condition_sf_formula() {
        // −x'' on (0,1), Dirichlet at 1, left condition turning away from Neumann
        let free = |_s: f64| parse_catalog("free").unwrap();
        let std = SymplecticSpace::standard(1);
        let mut flows = Vec::new();
        for sigma in [1.0, -1.0] {
            let bc = move |s: f64| {
                let left = std.neumann().transform(&std.rotation(sigma * s));
                BoundaryCondition::GeneralLagrangian(left.direct_sum(&std.dirichlet()))
            };
            let rep = verify_sf_formula(free, bc, (0.0, 1.3), 256).unwrap();
            assert!(rep.agree, "{rep:?}");
            flows.push(rep.sf);
        }
        // only one of the two turns pushes an eigenvalue through 0
        flows.sort();
        assert_eq!(flows, vec![-1, 0]);
    }

    #[test]
    fn constant_path_jump() {
        let p = parse_catalog("harmonic(3)").unwrap();
        let d = SymplecticSpace::standard(1).dirichlet();
        let dd = d.direct_sum(&d);
        let rep = morse_jump_check(&p, |_| dd.clone(), (0.0, 1.0), 256).unwrap();
        assert_eq!((rep.morse_start, rep.morse_end, rep.spectral_flow, rep.maslov, rep.residual), (0, 0, 0, 0, 0));
    }

    #[test]
    fn dirichlet_to_neumann_jump() {
        let p = parse_catalog("harmonic(2)").unwrap().restricted((0.0, PI));
        let space = SymplecticSpace::boundary(1, 1);
        let std = SymplecticSpace::standard(1);
        let dd = std.dirichlet().direct_sum(&std.dirichlet());
        for sigma in [1.0, -1.0] {
            let rot = dd.clone();
            let rep =
                morse_jump_check(&p, move |s| rot.transform(&space.rotation(sigma * s * FRAC_PI_2)), (0.0, 1.0), 1024)
                    .unwrap();
            assert_eq!((rep.morse_start, rep.morse_end), (1, 2), "{rep:?}");
            assert_eq!(rep.residual, 0, "{rep:?}");
        }
    }

    #[test]
    fn rellich_quarter_turn() {
        let f = SymplecticSpace::standard(1).dirichlet();
        let setup = RellichSetup::bessel(0.0, 1e-6, RellichSetup::rotating(&f, 1.0)).unwrap();
        let rep = rellich_ghosts(&setup, &[0.05, 0.02, 0.008], &[100.0, 1000.0], 2048).unwrap();
        let last = rep.samples.last().unwrap();
        assert_eq!(last.prediction, 1, "{rep:?}");
        assert_eq!(last.counts, vec![(100.0, 1), (1000.0, 1)]);
        assert!(rep.monotone && last.bottom < -1e4, "{rep:?}");
        // the opposite turn raises the boundary energy instead
        let setup = RellichSetup::bessel(0.0, 1e-6, RellichSetup::rotating(&f, -1.0)).unwrap();
        let rep = rellich_ghosts(&setup, &[0.02], &[100.0], 2048).unwrap();
        assert_eq!((rep.samples[0].prediction, rep.samples[0].counts[0].1), (0, 0));
    }

    #[test]
    fn rellich_transversality() {
        let f = SymplecticSpace::standard(1).dirichlet();
        let setup = RellichSetup::bessel(0.0, 1e-6, RellichSetup::rotating(&f, 1.0)).unwrap();
        assert!(matches!(rellich_ghosts(&setup, &[PI], &[100.0], 256), Err(SpectralError::TransversalityViolated(_))));
    }
}
