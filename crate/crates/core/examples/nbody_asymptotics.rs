//! Central configurations, the matrix B̄ and the asymptotic Morse index of total collisions,
//! parabolic and hyperbolic motions.

use nalgebra::DMatrix;
use symind::nbody::{asymptotic_morse, asymptotic_morse_from_bbar, bbar_spectrum, resolve_config, Motion};

fn main() {
    let motions = [Motion::TotalCollision, Motion::ParabolicInfinity, Motion::HyperbolicInfinity];
    for name in ["two-body", "lagrange", "euler", "square"] {
        let cc = resolve_config(name).unwrap();
        let spec: Vec<String> = bbar_spectrum(&cc).unwrap().iter().map(|e| format!("{e:+.6}")).collect();
        println!("{name:<9} residual {:.1e}  spec B̄ = [{}]", cc.residual, spec.join(", "));
        for m in motions {
            let rep = asymptotic_morse(&cc, m).unwrap();
            println!("          {:<10} {:?}", m.name(), rep.verdict);
        }
    }

    // an eigenvalue below −1/4 makes the collision index infinite
    let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, 0.1]));
    for m in motions {
        println!(
            "synthetic B̄ = diag(-1/2, 1/10), {:<10} {:?}",
            m.name(),
            asymptotic_morse_from_bbar(&b, m).unwrap().verdict
        );
    }
}
