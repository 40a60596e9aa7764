//! Crossing forms, the `μ^CLM` Maslov index of Lagrangian path pairs, triple and Hörmander indices.
//!
//! Crossings are located through the unitary picture: for an orthonormal frame with
//! complexification `U`, the symmetric unitary `S = UUᵀ` depends only on the subspace, and
//! `dim(ℓ₁ ∩ ℓ₂)` is the multiplicity of the eigenvalue 1 of `W = S₁* S₂`. With eigen-angles
//! `θⱼ`, the real function `Π sin(θⱼ/2) = det(W − I) / ((2i)ⁿ √det W)` changes sign at odd
//! crossings once the square-root branch is followed continuously, and the smallest principal
//! sine catches the even ones at its local minima.

mod triple;

pub use triple::{hormander_index, triple_index, triple_q_form};

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, max_abs};
use crate::symplectic::{InertiaTriple, LagrangianFrame, SymplecticError, SymplecticSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaslovError {
    #[error("t = {0} is not a crossing instant")]
    NotACrossing(f64),
    #[error("no transversal complement found near t = {0}")]
    ChartBreakdown(f64),
    #[error("no perturbation in the schedule regularizes the crossings")]
    UnresolvedDegeneracy,
    #[error("path exceeds the refinement cap ({0} samples)")]
    ContinuityBudgetExceeded(usize),
    #[error("paths live in different symplectic spaces")]
    SpaceMismatch,
    #[error("interval [{0}, {1}] is empty or outside the path domain")]
    BadInterval(f64, f64),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

type Sampler<'a> = Arc<dyn Fn(f64) -> LagrangianFrame + Send + Sync + 'a>;

/// A continuous path `t ↦ ℓ(t)` of Lagrangian subspaces, evaluated on demand.
#[derive(Clone)]
pub struct LagrangianPath<'a> {
    space: SymplecticSpace,
    domain: (f64, f64),
    samples: usize,
    refinable: bool,
    constant: Option<LagrangianFrame>,
    /// Extra initial sample points, e.g. integrator nodes.
    grid: Option<Arc<Vec<f64>>>,
    sampler: Sampler<'a>,
}

impl<'a> LagrangianPath<'a> {
    pub fn new(
        space: SymplecticSpace,
        domain: (f64, f64),
        sampler: impl Fn(f64) -> LagrangianFrame + Send + Sync + 'a,
    ) -> Self {
        Self { space, domain, samples: 256, refinable: true, constant: None, grid: None, sampler: Arc::new(sampler) }
    }

    pub fn constant(frame: LagrangianFrame) -> Self {
        let f = frame.clone();
        Self {
            space: frame.space(),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            samples: 256,
            refinable: true,
            constant: Some(frame),
            grid: None,
            sampler: Arc::new(move |_| f.clone()),
        }
    }

    /// Initial sample count used when scanning this path.
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(2);
        self
    }

    /// Adds points that every scan samples in addition to the uniform grid.
    pub fn with_grid(mut self, points: Vec<f64>) -> Self {
        self.grid = Some(Arc::new(points));
        self
    }

    /// Finite-difference step at `t`: `h`, capped by the local spacing of the extra grid.
    pub fn local_step(&self, t: f64, h: f64) -> f64 {
        let Some(g) = &self.grid else { return h };
        let k = g.partition_point(|&x| x < t);
        let spacing = match (k.checked_sub(1).and_then(|i| g.get(i)), g.get(k)) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => return h,
        };
        h.min(1e-3 * spacing)
    }

    /// Forbids adaptive subdivision; scans then fail instead of refining.
    pub fn fixed_grid(mut self) -> Self {
        self.refinable = false;
        self
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn at(&self, t: f64) -> LagrangianFrame {
        (self.sampler)(t)
    }

    /// The path `t ↦ M·ℓ(t)` for a fixed matrix `M` of the same space.
    pub fn transformed(&self, m: DMatrix<f64>) -> LagrangianPath<'a> {
        if let Some(c) = &self.constant {
            return LagrangianPath::constant(c.transform(&m)).with_samples(self.samples);
        }
        let inner = self.sampler.clone();
        let mut out = LagrangianPath::new(self.space, self.domain, move |t| inner(t).transform(&m));
        out.samples = self.samples;
        out.refinable = self.refinable;
        out.grid = self.grid.clone();
        out
    }
}

/// One crossing instant with its intersection and the inertia of the crossing form there.
#[derive(Clone, Debug)]
pub struct CrossingRecord {
    pub t: f64,
    pub intersection_basis: DMatrix<f64>,
    pub inertia: InertiaTriple,
}

impl CrossingRecord {
    pub fn multiplicity(&self) -> usize {
        self.intersection_basis.ncols()
    }

    pub fn is_regular(&self) -> bool {
        self.inertia.n_zero == 0
    }

    pub fn summary(&self) -> CrossingSummary {
        CrossingSummary { t: self.t, multiplicity: self.multiplicity(), inertia: self.inertia }
    }
}

/// Serializable view of a [`CrossingRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSummary {
    pub t: f64,
    pub multiplicity: usize,
    pub inertia: InertiaTriple,
}

/// Result of [`maslov_clm`].
#[derive(Clone, Debug)]
pub struct MaslovIndex {
    pub index: i64,
    pub crossings: Vec<CrossingRecord>,
    /// Rotation size used to regularize degenerate crossings, if any.
    pub perturbation: Option<f64>,
}

/// Numerical knobs of the crossing scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaslovOptions {
    pub initial_samples: usize,
    /// Largest principal sine allowed between consecutive samples of one path.
    pub gap_budget: f64,
    pub max_samples: usize,
    /// Smallest principal sine accepted as an intersection after localization.
    pub accept_tol: f64,
    /// Principal-sine tolerance for the intersection basis at an accepted crossing.
    pub basis_tol: f64,
    /// Crossings closer than `merge_tol · (b − a)` are one crossing.
    pub merge_tol: f64,
    /// Finite-difference step as a fraction of `b − a`.
    pub fd_step: f64,
    /// Eigenvalues of `(b − a)·Γ` below this magnitude are treated as zero.
    pub form_floor: f64,
    pub deltas: Vec<f64>,
    pub seed: u64,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        Self {
            initial_samples: 256,
            gap_budget: 0.1,
            max_samples: 1 << 16,
            accept_tol: 1e-7,
            basis_tol: 1e-6,
            merge_tol: 1e-8,
            fd_step: 1e-5,
            form_floor: 1e-7,
            deltas: vec![1e-6, 1e-5, 1e-4],
            seed: 0x5eed_c105,
        }
    }
}

/// `μ^CLM(path1, path2)` on `[a, b]` with default options.
pub fn maslov_clm(
    path1: &LagrangianPath<'_>,
    path2: &LagrangianPath<'_>,
    interval: (f64, f64),
) -> Result<MaslovIndex, MaslovError> {
    maslov_clm_with(path1, path2, interval, &MaslovOptions::default())
}

/// `μ^CLM(ℓ₁, ℓ₂) = n₊(Γ(a)) + Σ sgn Γ(t) − n₋(Γ(b))`, `Γ = Q(ℓ₂) − Q(ℓ₁)` on `ℓ₁ ∩ ℓ₂`.
pub fn maslov_clm_with(
    path1: &LagrangianPath<'_>,
    path2: &LagrangianPath<'_>,
    interval: (f64, f64),
    opts: &MaslovOptions,
) -> Result<MaslovIndex, MaslovError> {
    let (a, b) = interval;
    check_pair(path1, path2, a, b)?;
    if let Some(res) = evaluate(path1, path2, a, b, opts)? {
        if res.crossings.iter().all(CrossingRecord::is_regular) {
            return Ok(res);
        }
    }
    let mut previous: Option<i64> = None;
    for &delta in &opts.deltas {
        let nudged = nudge(path2, delta, a, b);
        match evaluate(path1, &nudged, a, b, opts)? {
            Some(res) if res.crossings.iter().all(CrossingRecord::is_regular) => {
                if previous == Some(res.index) {
                    return Ok(MaslovIndex { perturbation: Some(delta), ..res });
                }
                previous = Some(res.index);
            }
            _ => previous = None,
        }
    }
    Err(MaslovError::UnresolvedDegeneracy)
}

/// Crossing instants of the pair on `[a, b]` with their intersection bases (no forms).
pub fn locate_crossings(
    path1: &LagrangianPath<'_>,
    path2: &LagrangianPath<'_>,
    interval: (f64, f64),
    opts: &MaslovOptions,
) -> Result<Option<Vec<(f64, DMatrix<f64>)>>, MaslovError> {
    let (a, b) = interval;
    check_pair(path1, path2, a, b)?;
    Ok(scan(path1, path2, a, b, opts)?.map(|v| v.into_iter().map(|c| (c.t, c.basis)).collect()))
}

/// Inertia of the crossing form of `path` against a fixed `reference` at `t0`.
pub fn crossing_form(
    path: &LagrangianPath<'_>,
    reference: &LagrangianFrame,
    t0: f64,
    h: f64,
) -> Result<InertiaTriple, MaslovError> {
    if path.space() != reference.space() {
        return Err(MaslovError::SpaceMismatch);
    }
    let opts = MaslovOptions::default();
    let here = path.at(t0);
    let basis = linalg::subspace_intersection(here.frame(), reference.frame(), opts.basis_tol);
    if basis.ncols() == 0 {
        return Err(MaslovError::NotACrossing(t0));
    }
    let (lo, hi) = path.domain();
    let q = q_form(path, &basis, t0, h, lo, hi, opts.seed)?;
    Ok(InertiaTriple::of_symmetric(&q, opts.form_floor))
}

fn check_pair(p1: &LagrangianPath<'_>, p2: &LagrangianPath<'_>, a: f64, b: f64) -> Result<(), MaslovError> {
    if p1.space() != p2.space() {
        return Err(MaslovError::SpaceMismatch);
    }
    let inside = |p: &LagrangianPath<'_>| p.domain.0 <= a && b <= p.domain.1;
    if !(a < b) || !inside(p1) || !inside(p2) {
        return Err(MaslovError::BadInterval(a, b));
    }
    Ok(())
}

/// `e^{δ sin(π(t−a)/(b−a)) J} ℓ(t)`: same endpoints, generic interior.
fn nudge<'p>(path: &'p LagrangianPath<'_>, delta: f64, a: f64, b: f64) -> LagrangianPath<'p> {
    let space = path.space();
    LagrangianPath::new(space, path.domain(), move |t| {
        let th = delta * (PI * (t - a) / (b - a)).sin();
        LagrangianFrame::orthonormalized(space, &(space.rotation(th) * path.at(t).frame()))
    })
    .with_samples(path.samples)
}

fn evaluate(
    p1: &LagrangianPath<'_>,
    p2: &LagrangianPath<'_>,
    a: f64,
    b: f64,
    opts: &MaslovOptions,
) -> Result<Option<MaslovIndex>, MaslovError> {
    let located = match scan(p1, p2, a, b, opts)? {
        Some(v) => v,
        None => return Ok(None),
    };
    let h = opts.fd_step * (b - a);
    let end = opts.merge_tol * (b - a);
    let mut index = 0i64;
    let mut crossings = Vec::with_capacity(located.len());
    for (k, c) in located.into_iter().enumerate() {
        let seed = opts.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let h = p1.local_step(c.t, p2.local_step(c.t, h));
        let mut gamma = q_form(p2, &c.basis, c.t, h, a, b, seed)?;
        if !p1.is_constant() {
            gamma -= q_form(p1, &c.basis, c.t, h, a, b, seed ^ 1)?;
        }
        let inertia = InertiaTriple::of_symmetric(&(gamma * (b - a)), opts.form_floor);
        if c.t - a <= end {
            index += inertia.n_plus as i64;
        } else if b - c.t <= end {
            index -= inertia.n_minus as i64;
        } else {
            index += inertia.signature();
        }
        crossings.push(CrossingRecord { t: c.t, intersection_basis: c.basis, inertia });
    }
    Ok(Some(MaslovIndex { index, crossings, perturbation: None }))
}

/// `Q(ℓ, ℓ̇)` on the columns of `v ⊂ ℓ(t0)`: `d/dt ω(vᵢ, wⱼ(t))` with `vⱼ + wⱼ(t) ∈ ℓ(t)`, `wⱼ ∈ W`.
///
/// Computed with `W = Jℓ(t0)` and checked against a random transversal `W`.
fn q_form(
    path: &LagrangianPath<'_>,
    v: &DMatrix<f64>,
    t0: f64,
    h: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<DMatrix<f64>, MaslovError> {
    let space = path.space();
    let j = space.j();
    let here = path.at(t0);
    let h = local_step(path, &here, t0, h, lo, hi);
    let w0 = &j * here.frame();
    let q0 = q_in_chart(path, v, &w0, t0, h, lo, hi)?;
    if path.is_constant() {
        return Ok(q0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let w1 = random_transversal(&space, here.frame(), &mut rng);
        let w1 = match w1 {
            Some(w) => w,
            None => continue,
        };
        if let Ok(q1) = q_in_chart(path, v, &w1, t0, h, lo, hi) {
            let scale = 1.0 + max_abs(&q0);
            if max_abs(&(&q1 - &q0)) > 1e-3 * scale {
                // the two charts disagree beyond finite-difference accuracy
                return Err(MaslovError::ChartBreakdown(t0));
            }
            return Ok(q0);
        }
    }
    Err(MaslovError::ChartBreakdown(t0))
}

/// Shrinks `h` until the path moves by at most a small angle over one step.
fn local_step(path: &LagrangianPath<'_>, here: &LagrangianFrame, t0: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let mut h = h;
    for _ in 0..40 {
        let t1 = if t0 + h <= hi { t0 + h } else { (t0 - h).max(lo) };
        if gap(here, &path.at(t1)) <= 1e-3 || h <= 1e-13 * t0.abs().max(1e-300) {
            break;
        }
        h *= 0.25;
    }
    h
}

fn random_transversal(space: &SymplecticSpace, frame: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Option<DMatrix<f64>> {
    let n = space.half_dim();
    let s = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = linalg::symmetrize(&s);
    // graph {p = D S x} with D the block signs, then a random unitary-symplectic rotation
    let mut cols = DMatrix::zeros(space.dim(), n);
    for (k, &(p, x, sign)) in space.pairs().iter().enumerate() {
        cols[(x, k)] = 1.0;
        for j in 0..n {
            cols[(p, j)] = sign * s[(k, j)];
        }
    }
    let w = LagrangianFrame::orthonormalized(*space, &cols);
    let rot = space.rotation(rng.random_range(0.0..PI));
    let w = rot * w.frame();
    let mut stacked = DMatrix::zeros(space.dim(), space.dim());
    stacked.view_mut((0, 0), (space.dim(), n)).copy_from(frame);
    stacked.view_mut((0, n), (space.dim(), n)).copy_from(&w);
    let sv = linalg::singular_values(&stacked);
    if sv.last().cloned().unwrap_or(0.0) > 1e-2 {
        Some(w)
    } else {
        None
    }
}

fn q_in_chart(
    path: &LagrangianPath<'_>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    t0: f64,
    h: f64,
    lo: f64,
    hi: f64,
) -> Result<DMatrix<f64>, MaslovError> {
    let space = path.space();
    let j = space.j();
    let n = space.half_dim();
    let d = space.dim();
    let vj = v.transpose() * &j * w;
    let g = |t: f64| -> Result<DMatrix<f64>, MaslovError> {
        let z = path.at(t);
        let mut m = DMatrix::zeros(d, d);
        m.view_mut((0, 0), (d, n)).copy_from(z.frame());
        m.view_mut((0, n), (d, n)).copy_from(&(-w));
        let sol = m.lu().solve(v).ok_or(MaslovError::ChartBreakdown(t))?;
        let bcoef = sol.rows(n, n).into_owned();
        Ok(&vj * bcoef)
    };
    let central = t0 - h >= lo && t0 + h <= hi;
    let forward = t0 + 2.0 * h <= hi;
    let deriv = |step: f64| -> Result<DMatrix<f64>, MaslovError> {
        if central {
            Ok((g(t0 + step)? - g(t0 - step)?) / (2.0 * step))
        } else if forward {
            Ok((g(t0)? * -3.0 + g(t0 + step)? * 4.0 - g(t0 + 2.0 * step)?) / (2.0 * step))
        } else {
            Ok((g(t0)? * 3.0 - g(t0 - step)? * 4.0 + g(t0 - 2.0 * step)?) / (2.0 * step))
        }
    };
    let d1 = deriv(h)?;
    let d2 = deriv(0.5 * h)?;
    Ok(linalg::symmetrize(&((d2 * 4.0 - d1) / 3.0)))
}

struct Located {
    t: f64,
    basis: DMatrix<f64>,
}

#[derive(Clone)]
struct Sample {
    t: f64,
    f1: LagrangianFrame,
    f2: LagrangianFrame,
    /// det(W − I) and det W for W = S₁* S₂.
    det_wmi: Complex<f64>,
    det_w: Complex<f64>,
    /// Smallest principal sine between the two frames.
    d: f64,
    /// Arguments of the eigenvalues of `W`; a crossing is a phase passing through 0.
    phases: Vec<f64>,
}

fn sample(p1: &LagrangianPath<'_>, p2: &LagrangianPath<'_>, t: f64) -> Sample {
    let f1 = p1.at(t);
    let f2 = p2.at(t);
    let u1 = f1.complexify();
    let u2 = f2.complexify();
    let s1 = &u1 * u1.transpose();
    let s2 = &u2 * u2.transpose();
    let w = s1.adjoint() * s2;
    let n = w.nrows();
    let det_w = w.clone().lu().determinant();
    let phases = linalg::complex_eigenvalues(&w).iter().map(|z| z.arg()).collect();
    let det_wmi = (w - DMatrix::<Complex<f64>>::identity(n, n)).lu().determinant();
    let d = linalg::principal_sines(f1.frame(), f2.frame())[0];
    Sample { t, f1, f2, det_wmi, det_w, d, phases }
}

/// Whether two or more phases of `W` could pass through 0 inside the interval, where
/// they would cancel in the sign test and share one trough of the smallest sine.
///
/// Phases move by at most `2(asin g₁ + asin g₂)` across the interval. Phases already
/// within `floor` of 0 at an end are located from the samples themselves.
fn crowded(l: &Sample, r: &Sample, floor: f64) -> bool {
    let reach = 2.0 * (gap(&l.f1, &r.f1).min(1.0).asin() + gap(&l.f2, &r.f2).min(1.0).asin());
    if reach <= floor {
        return false;
    }
    let near = |s: &Sample| s.phases.iter().filter(|p| p.abs() > floor && p.abs() <= reach).count();
    near(l) >= 2 && near(r) >= 2
}

fn gap(a: &LagrangianFrame, b: &LagrangianFrame) -> f64 {
    linalg::principal_sines(a.frame(), b.frame()).last().cloned().unwrap_or(0.0)
}

/// Square root of `det W` on the branch closest to `prev`.
fn follow_sqrt(z: Complex<f64>, prev: Complex<f64>) -> Complex<f64> {
    let s = z.sqrt();
    if (s * prev.conj()).re >= 0.0 {
        s
    } else {
        -s
    }
}

fn signed_product(s: &Sample, root: Complex<f64>) -> f64 {
    let n = s.f1.space().half_dim() as u32;
    (s.det_wmi / (Complex::new(0.0, 2.0).powu(n) * root)).re
}

fn scan(
    p1: &LagrangianPath<'_>,
    p2: &LagrangianPath<'_>,
    a: f64,
    b: f64,
    opts: &MaslovOptions,
) -> Result<Option<Vec<Located>>, MaslovError> {
    let n0 = opts.initial_samples.max(p1.samples.min(p2.samples)).max(8);
    let mut ts: Vec<f64> = (0..=n0).map(|k| a + (b - a) * k as f64 / n0 as f64).collect();
    for g in [&p1.grid, &p2.grid].into_iter().flatten() {
        ts.extend(g.iter().copied().filter(|&t| t > a && t < b));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut samples: Vec<Sample> = ts.par_iter().map(|&t| sample(p1, p2, t)).collect();
    let refinable = p1.refinable && p2.refinable;

    loop {
        let mids: Vec<f64> = samples
            .windows(2)
            .filter(|w| {
                let g = gap(&w[0].f1, &w[1].f1).max(gap(&w[0].f2, &w[1].f2));
                let phase = (w[1].det_w / w[0].det_w).arg().abs();
                (g > opts.gap_budget || phase > 1.0 || crowded(&w[0], &w[1], opts.accept_tol))
                    && w[1].t - w[0].t > 1e-13 * (b - a)
            })
            .map(|w| 0.5 * (w[0].t + w[1].t))
            .collect();
        if mids.is_empty() {
            break;
        }
        if !refinable || samples.len() + mids.len() > opts.max_samples {
            return Err(MaslovError::ContinuityBudgetExceeded(opts.max_samples));
        }
        let extra: Vec<Sample> = mids.par_iter().map(|&t| sample(p1, p2, t)).collect();
        samples.extend(extra);
        samples.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap());
    }

    // a run of exact intersections means the crossing is not isolated
    let merge = opts.merge_tol * (b - a);
    let mut run: Option<(usize, f64)> = None;
    for s in &samples {
        run = if s.d <= opts.accept_tol { Some(run.map_or((1, s.t), |(n, t0)| (n + 1, t0))) } else { None };
        if matches!(run, Some((n, t0)) if n >= 3 && s.t - t0 > merge) {
            return Ok(None);
        }
    }

    let mut roots = Vec::with_capacity(samples.len());
    let mut prev = samples[0].det_w.sqrt();
    for s in &samples {
        prev = follow_sqrt(s.det_w, prev);
        roots.push(prev);
    }
    let f: Vec<f64> = samples.iter().zip(&roots).map(|(s, r)| signed_product(s, *r)).collect();

    let mut found: Vec<(f64, f64)> = Vec::new();
    let m = samples.len();
    for k in 0..m - 1 {
        if f[k] * f[k + 1] < 0.0 {
            found.push(bisect_sign(p1, p2, &samples[k], roots[k], &samples[k + 1]));
        }
    }
    let trough = 3.0 * opts.gap_budget;
    for k in 0..m {
        let dk = samples[k].d;
        if dk > trough {
            continue;
        }
        let left = if k > 0 { samples[k - 1].d } else { f64::INFINITY };
        let right = if k + 1 < m { samples[k + 1].d } else { f64::INFINITY };
        if (dk <= left && dk < right) || (dk < left && dk <= right) {
            let lo = samples[k.saturating_sub(1)].t;
            let hi = samples[(k + 1).min(m - 1)].t;
            found.push(golden_min(p1, p2, lo, hi));
        }
    }

    found.retain(|&(_, d)| d <= opts.accept_tol);
    found.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (t, d) in found {
        match merged.last_mut() {
            Some(last) if t - last.0 <= merge => {
                if d < last.1 {
                    *last = (t, d);
                }
            }
            _ => merged.push((t, d)),
        }
    }
    let out = merged
        .into_iter()
        .map(|(t, _)| {
            let f1 = p1.at(t);
            let f2 = p2.at(t);
            let basis = linalg::subspace_intersection(f2.frame(), f1.frame(), opts.basis_tol);
            Located { t, basis }
        })
        .filter(|c| c.basis.ncols() > 0)
        .collect();
    Ok(Some(out))
}

/// Bisects a sign change of the branch-followed product; returns `(t, smallest sine)`.
fn bisect_sign(
    p1: &LagrangianPath<'_>,
    p2: &LagrangianPath<'_>,
    left: &Sample,
    left_root: Complex<f64>,
    right: &Sample,
) -> (f64, f64) {
    let (mut lo, mut hi) = (left.t, right.t);
    let (mut d_lo, mut d_hi) = (left.d, right.d);
    let mut root = left_root;
    let f_lo_sign = signed_product(left, left_root).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sample(p1, p2, mid);
        let r = follow_sqrt(s.det_w, root);
        let fm = signed_product(&s, r);
        if fm == 0.0 {
            return (mid, s.d);
        }
        if fm.signum() == f_lo_sign {
            lo = mid;
            d_lo = s.d;
            root = r;
        } else {
            hi = mid;
            d_hi = s.d;
        }
    }
    if d_lo <= d_hi {
        (lo, d_lo)
    } else {
        (hi, d_hi)
    }
}

/// Golden-section minimization of the smallest principal sine on `[lo, hi]`.
fn golden_min(p1: &LagrangianPath<'_>, p2: &LagrangianPath<'_>, lo: f64, hi: f64) -> (f64, f64) {
    let d = |t: f64| sample_d(p1, p2, t);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut e = a + r * (b - a);
    let mut fc = d(c);
    let mut fe = d(e);
    let (da, db) = (d(a), d(b));
    for _ in 0..200 {
        if !(b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)) {
            break;
        }
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            fc = d(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            fe = d(e);
        }
    }
    let mut best = if fc <= fe { (c, fc) } else { (e, fe) };
    // endpoint minima (crossings at the interval ends) are reached only in the limit
    if da < best.1 {
        best = (lo, da);
    }
    if db < best.1 {
        best = (hi, db);
    }
    best
}

fn sample_d(p1: &LagrangianPath<'_>, p2: &LagrangianPath<'_>, t: f64) -> f64 {
    let f1 = p1.at(t);
    let f2 = p2.at(t);
    linalg::principal_sines(f1.frame(), f2.frame())[0]
}
