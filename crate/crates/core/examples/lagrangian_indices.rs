//! Maslov index of a rotating line, triple and Hörmander indices in ℝ² and ℝ⁴.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use symind::maslov::{hormander_index, maslov_clm, triple_index, LagrangianPath};
use symind::symplectic::{LagrangianFrame, SymplecticSpace};

fn line(space: SymplecticSpace, p: f64, x: f64) -> LagrangianFrame {
    LagrangianFrame::new(space, DMatrix::from_column_slice(2, 1, &[p, x])).unwrap()
}

fn main() {
    let space = SymplecticSpace::standard(1);
    let (dir, neu) = (space.dirichlet(), space.neumann());

    // e^{tJ}Λ_D sweeps the projective line once on [0, π]
    for end in [PI / 2.0, PI, 2.0 * PI] {
        let start = dir.clone();
        let turning = LagrangianPath::new(space, (0.0, end), move |t| start.transform(&space.rotation(t)));
        let mu = maslov_clm(&LagrangianPath::constant(neu.clone()), &turning, (0.0, end)).unwrap();
        let ts: Vec<String> = mu.crossings.iter().map(|c| format!("{:.6}", c.t)).collect();
        println!("μ(Λ_N, e^(tJ)Λ_D) on [0, {end:.4}] = {:>2}   crossings at [{}]", mu.index, ts.join(", "));
    }

    let diag = line(space, 1.0, 1.0);
    let anti = line(space, 1.0, -1.0);
    println!("ι(Λ_D, Λ_N, span(1,1))  = {}", triple_index(&dir, &neu, &diag).unwrap());
    println!("ι(Λ_D, Λ_N, span(1,-1)) = {}", triple_index(&dir, &neu, &anti).unwrap());
    println!("s(Λ_D, Λ_N; span(1,1), span(1,-1)) = {}", hormander_index(&dir, &neu, &diag, &anti).unwrap());

    // a boundary-data space ℝ²⊕ℝ² with the left block carrying −Ω
    let b = SymplecticSpace::boundary(1, 1);
    println!("\nboundary space: Dirichlet ⊕ Dirichlet = {}", b.dirichlet().frame().transpose());
    let std2 = SymplecticSpace::standard(2);
    let cols = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 2.0]);
    let l = LagrangianFrame::orthonormalized(std2, &cols);
    let iota = triple_index(&std2.dirichlet(), &std2.neumann(), &l).unwrap();
    println!("ι(Λ_D, Λ_N, L) in ℝ⁴ = {iota}");
}
