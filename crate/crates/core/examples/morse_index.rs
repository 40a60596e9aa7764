//! Conjugate points and Morse indices of −x'' − ω²x under Dirichlet and Neumann conditions,
//! cross-checked against the discretized operator.

use std::f64::consts::PI;

use symind::spectral::{DiscreteOperator, DEFAULT_GRID};
use symind::sturm::{catalog, morse_index_dirichlet, morse_index_general, BoundaryCondition, DEFAULT_SCHEDULE};

fn main() {
    println!("{:>6} {:>8} {:>10} {:>10}", "omega", "#(kπ)²<ω²", "iMor", "discrete");
    for omega in [2.0, 5.0, 10.0, 20.0] {
        let p = catalog::harmonic(omega);
        let rep = morse_index_dirichlet(&p, &DEFAULT_SCHEDULE).unwrap();
        let exact = (1..).take_while(|k| (*k as f64 * PI).powi(2) < omega * omega).count();
        let op = DiscreteOperator::new(&p, &BoundaryCondition::Dirichlet, DEFAULT_GRID).unwrap();
        println!("{omega:>6} {exact:>8} {:>10?} {:>10}", rep.verdict.finite().unwrap(), op.negative_count());
        let ts: Vec<String> = rep.crossings.iter().map(|c| format!("{:.10}", c.t)).collect();
        println!("       conjugate points: [{}]", ts.join(", "));
    }

    // changing the boundary condition moves the index by a triple index
    let p = catalog::harmonic(2.0).restricted((0.0, PI));
    let d = morse_index_general(&p, &BoundaryCondition::Dirichlet).unwrap();
    let n = morse_index_general(&p, &BoundaryCondition::Neumann).unwrap();
    println!("\nω = 2 on (0, π): iMor(D) = {:?}, iMor(N) = {:?}", d.verdict, n.verdict);
    println!("  correction ι = {:?}", n.diagnostics.values.get("correction"));
    println!(
        "  discrete counts: D {:?}, N {:?}",
        d.diagnostics.values.get("discrete_count"),
        n.diagnostics.values.get("discrete_count")
    );
}
