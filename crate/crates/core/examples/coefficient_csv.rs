//! Coefficients sampled on a grid: writes a CSV for the Mathieu coefficient, reads it back with
//! cubic interpolation and compares the Morse index with the catalog problem.

use std::io::Write;

use symind::sturm::{catalog, morse_index_dirichlet, GridSampled, SlProblem, DEFAULT_SCHEDULE};

fn main() {
    let (a, q) = (12.0, 2.0);
    let path = std::env::temp_dir().join("symind_mathieu.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "t,P_11,Q_11,R_11").unwrap();
    let n = 400;
    for k in 0..=n {
        let t = std::f64::consts::PI * k as f64 / n as f64;
        writeln!(f, "{t},1,0,{}", 2.0 * q * (2.0 * t).cos() - a).unwrap();
    }
    drop(f);

    let g = GridSampled::from_csv(&path).unwrap();
    let span = g.span();
    let sampled = SlProblem::new(g, span);
    let exact = catalog::mathieu(a, q);
    let i1 = morse_index_dirichlet(&sampled, &DEFAULT_SCHEDULE).unwrap();
    let i2 = morse_index_dirichlet(&exact, &DEFAULT_SCHEDULE).unwrap();
    println!("from {}: {:?}", path.display(), i1.verdict);
    println!("catalog mathieu({a},{q}): {:?}", i2.verdict);
    for (c1, c2) in i1.crossings.iter().zip(&i2.crossings) {
        println!("  conjugate point {:.8} vs {:.8}", c1.t, c2.t);
    }
}
