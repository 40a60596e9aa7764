//! Spectral flow of −x'' − 100s x on (0, 1) with Dirichlet ends against the Maslov index of
//! the boundary condition and the graph of the transfer matrix. Prints an eigenvalue trace as CSV.

use symind::spectral::{eigen_trace, verify_sf_formula, DiscreteOperator};
use symind::sturm::{catalog, BoundaryCondition};

fn main() {
    let family = |s: f64| catalog::harmonic(10.0 * s.sqrt());
    for grid in [256, 512, 1024] {
        let rep = verify_sf_formula(family, |_| BoundaryCondition::Dirichlet, (0.0, 1.0), grid).unwrap();
        println!("N = {grid:>4}: spectral flow {}, μ^CLM {}, cells {}", rep.sf, rep.maslov, rep.cells.len());
    }

    let s_grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let trace = eigen_trace(|s| DiscreteOperator::new(&family(s), &BoundaryCondition::Dirichlet, 512), &s_grid, 4, 1.0)
        .unwrap();
    println!();
    trace.write_csv(std::io::stdout()).unwrap();
}
