//! −x'' + q t⁻² x on (0, 1]: endpoint type, conjugate points and the Morse index verdict
//! over a schedule of truncations t ≥ δ.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use symind::bessel::{classify, zero_sequence, BesselEnd, BesselMatrixProblem};
use symind::sturm::{
    catalog, conjugate_points, endpoint_classify, morse_index_dirichlet, Endpoint, SturmOptions, DEFAULT_SCHEDULE,
};
use symind::symplectic::SymplecticSpace;

fn main() {
    for q in [0.0, 0.5, 1.0, -0.2, -0.25 - PI * PI] {
        let p = catalog::bessel_problem(q).unwrap();
        let class = endpoint_classify(&p, Endpoint::Left).unwrap();
        let bessel =
            classify(&BesselMatrixProblem::constant(DMatrix::from_element(1, 1, q), BesselEnd::ZeroEnd)).unwrap();
        let rep = morse_index_dirichlet(&p, &DEFAULT_SCHEDULE).unwrap();
        let trace: Vec<String> =
            rep.diagnostics.delta_trace.iter().map(|d| format!("{:e}:{}", d.delta, d.count)).collect();
        println!("q = {q:<10.5} end {class:?}, {:?}, verdict {:?}", bessel.overall, rep.verdict);
        println!("    δ-schedule counts [{}]", trace.join(" "));
    }

    let q = -0.25 - PI * PI;
    let mut zeros = zero_sequence(q, ((-4.0f64).exp(), 1.0)).unwrap();
    zeros.sort_by(f64::total_cmp);
    println!("\nq = -1/4 - π²: analytic zeros on (e^-4, 1] = {zeros:.9?}");
    // flow the solution vanishing at 1 toward the window's left end
    let eps = (-4.0f64).exp();
    let window = catalog::bessel_problem(q).unwrap().restricted((eps, 1.0));
    let dir = SymplecticSpace::standard(1).dirichlet();
    let pts = conjugate_points(&window, 1.0, &dir, &dir, (eps, 1.0), &SturmOptions::default()).unwrap();
    let inside: Vec<f64> = pts.iter().map(|c| c.t).collect();
    println!("computed conjugate points                 = {inside:.9?}");
}
