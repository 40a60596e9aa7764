//! A limit-circle condition at 0 turned away from the Friedrichs one pushes an eigenvalue of the
//! truncated Bessel operator toward −∞; the count below −M matches a Maslov index.

use symind::spectral::{rellich_ghosts, RellichSetup};
use symind::symplectic::SymplecticSpace;

fn main() {
    let friedrichs = SymplecticSpace::standard(1).dirichlet();
    let u = [0.1, 0.05, 0.02, 0.01, 0.005];
    for turn in [1.0, -1.0] {
        let setup = RellichSetup::bessel(0.0, 1e-6, RellichSetup::rotating(&friedrichs, turn)).unwrap();
        let rep = rellich_ghosts(&setup, &u, &[100.0, 1000.0, 10000.0], 2048).unwrap();
        println!("turn {turn:+}: bottom eigenvalue decreasing as u → 0: {}", rep.monotone);
        for s in &rep.samples {
            println!("  u = {:<6} bottom {:>14.3}  counts {:?}  μ^CLM {}", s.u, s.bottom, s.counts, s.prediction);
        }
    }
}
