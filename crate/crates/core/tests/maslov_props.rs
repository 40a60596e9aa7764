mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use symind::maslov::{
    hormander_index, maslov_clm, maslov_clm_with, triple_index, triple_q_form, LagrangianPath, MaslovOptions,
};
use symind::symplectic::{InertiaTriple, LagrangianFrame, SymplecticSpace};

use common::{coarse_angles, coincidences, line_triple_index, lines_frame, winding};

fn frame(space: SymplecticSpace, cols: DMatrix<f64>) -> LagrangianFrame {
    LagrangianFrame::orthonormalized(space, &cols)
}

fn q_plus(alpha: &LagrangianFrame, beta: &LagrangianFrame, gamma: &LagrangianFrame) -> usize {
    let (_, q) = triple_q_form(alpha, beta, gamma).unwrap();
    InertiaTriple::of_symmetric(&q, 1e-9 * (1.0 + q.amax())).n_plus
}

/// Three direct sums of lines at coarse angles, moved by a common random symplectic matrix.
fn coarse_triple(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<LagrangianFrame>) {
    let mut rng = common::rng(seed);
    let space = SymplecticSpace::standard(n);
    let angles: Vec<Vec<f64>> = (0..4).map(|_| coarse_angles(&mut rng, n)).collect();
    let m = common::random_symplectic(&mut rng, n);
    let frames = angles.iter().map(|a| frame(space, &m * lines_frame(a))).collect();
    (angles, frames)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotating_lines_count_their_windings(
        seed in any::<u64>(),
        n in 1usize..=3,
    ) {
        let mut rng = common::rng(seed);
        use rand::Rng;
        let params: Vec<(f64, f64, f64, f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random_range(0.0..PI),
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(1..4) as f64,
                    rng.random_range(0.0..PI),
                )
            })
            .collect();
        let theta = |p: &(f64, f64, f64, f64, f64), t: f64| p.0 + p.1 * t + p.2 * (p.3 * t).sin();
        for p in &params {
            for t in [0.0, 1.0] {
                let d = (theta(p, t) - p.4).rem_euclid(PI);
                prop_assume!(d > 1e-3 && PI - d > 1e-3);
            }
        }
        let expected: i64 = params.iter().map(|p| winding(p.4, theta(p, 0.0), theta(p, 1.0))).sum();

        let space = SymplecticSpace::standard(n);
        let m = common::random_symplectic(&mut rng, n);
        let phis: Vec<f64> = params.iter().map(|p| p.4).collect();
        let fixed = LagrangianPath::constant(frame(space, lines_frame(&phis)));
        let ps = params.clone();
        let moving = LagrangianPath::new(space, (0.0, 1.0), move |t| {
            let th: Vec<f64> = ps.iter().map(|p| theta(p, t)).collect();
            frame(space, lines_frame(&th))
        });
        prop_assert_eq!(maslov_clm(&fixed, &moving, (0.0, 1.0)).unwrap().index, expected);

        // the same pair moved by a symplectic matrix
        let mu = maslov_clm(&fixed.transformed(m.clone()), &moving.transformed(m), (0.0, 1.0)).unwrap();
        prop_assert_eq!(mu.index, expected);
    }

    #[test]
    fn unitary_paths_are_additive_and_invariant(seed in any::<u64>(), n in 1usize..=3, c in 0.2f64..0.8) {
        let mut rng = common::rng(seed);
        let space = SymplecticSpace::standard(n);
        let u0 = common::random_unitary(&mut rng, n);
        let h = common::random_hermitian(&mut rng, n, 3.0);
        let k = common::random_hermitian(&mut rng, n, 1.0);
        let g = common::random_lagrangian_frame(&mut rng, n);
        let f = common::unitary_path(u0, h, k);
        for t in [0.0, c, 1.0] {
            prop_assume!(common::transversality(&f(t), &g) > 1e-3);
        }
        let fixed = LagrangianPath::constant(frame(space, g));
        let moving = LagrangianPath::new(space, (0.0, 1.0), move |t| frame(space, f(t)));
        let whole = maslov_clm(&fixed, &moving, (0.0, 1.0)).unwrap().index;
        let left = maslov_clm(&fixed, &moving, (0.0, c)).unwrap().index;
        let right = maslov_clm(&fixed, &moving, (c, 1.0)).unwrap().index;
        prop_assert_eq!(whole, left + right);

        let m = common::random_symplectic(&mut rng, n);
        let moved = maslov_clm(&fixed.transformed(m.clone()), &moving.transformed(m), (0.0, 1.0)).unwrap();
        prop_assert_eq!(moved.index, whole);

        // reversing the roles of the two paths negates the index
        let swapped = maslov_clm(&moving, &fixed, (0.0, 1.0)).unwrap().index;
        prop_assert_eq!(swapped, -whole);
    }

    #[test]
    fn crossing_forms_do_not_depend_on_the_complement(seed in any::<u64>(), n in 1usize..=3, other in any::<u64>()) {
        let mut rng = common::rng(seed);
        let space = SymplecticSpace::standard(n);
        let f = common::unitary_path(
            common::random_unitary(&mut rng, n),
            common::random_hermitian(&mut rng, n, 3.0),
            common::random_hermitian(&mut rng, n, 1.0),
        );
        let g = common::random_lagrangian_frame(&mut rng, n);
        let fixed = LagrangianPath::constant(frame(space, g));
        let moving = LagrangianPath::new(space, (0.0, 1.0), move |t| frame(space, f(t)));
        let a = maslov_clm_with(&fixed, &moving, (0.0, 1.0), &MaslovOptions::default()).unwrap();
        let opts = MaslovOptions { seed: other, ..MaslovOptions::default() };
        let b = maslov_clm_with(&fixed, &moving, (0.0, 1.0), &opts).unwrap();
        prop_assert_eq!(a.index, b.index);
        prop_assert_eq!(a.crossings.len(), b.crossings.len());
        for (x, y) in a.crossings.iter().zip(&b.crossings) {
            prop_assert_eq!(x.inertia, y.inertia);
        }
    }

    #[test]
    fn triple_index_of_line_sums(seed in any::<u64>(), n in 1usize..=3) {
        let (angles, l) = coarse_triple(seed, n);
        let expected: usize = (0..n).map(|i| line_triple_index(angles[0][i], angles[1][i], angles[2][i])).sum();
        prop_assert_eq!(triple_index(&l[0], &l[1], &l[2]).unwrap(), expected);
    }

    #[test]
    fn circular_permutation(seed in any::<u64>(), n in 1usize..=3) {
        let (angles, l) = coarse_triple(seed, n);
        let (a, b, c) = (&l[0], &l[1], &l[2]);
        let lhs = triple_index(a, b, c).unwrap() as i64 - triple_index(b, c, a).unwrap() as i64;
        let rhs = coincidences(&angles[0], &angles[2]) as i64 - coincidences(&angles[1], &angles[0]) as i64;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn q_form_coindex_is_cyclic(seed in any::<u64>(), n in 1usize..=3) {
        let (_, l) = coarse_triple(seed, n);
        let (a, b, c) = (&l[0], &l[1], &l[2]);
        let first = q_plus(a, b, c);
        prop_assert_eq!(q_plus(b, c, a), first);
        prop_assert_eq!(q_plus(c, a, b), first);
    }

    #[test]
    fn hormander_reversal(seed in any::<u64>(), n in 1usize..=3) {
        let (angles, l) = coarse_triple(seed, n);
        let s = hormander_index(&l[0], &l[1], &l[2], &l[3]).unwrap();
        let back = hormander_index(&l[2], &l[3], &l[0], &l[1]).unwrap();
        let mut correction = 0i64;
        for j in 0..2 {
            for k in 0..2 {
                let sign = if (j + k) % 2 == 0 { -1 } else { 1 };
                correction += sign * coincidences(&angles[j], &angles[2 + k]) as i64;
            }
        }
        prop_assert_eq!(s, -back + correction);
        prop_assert_eq!(hormander_index(&l[0], &l[1], &l[3], &l[2]).unwrap(), -s);
        prop_assert_eq!(hormander_index(&l[0], &l[1], &l[2], &l[2]).unwrap(), 0);
    }

    #[test]
    fn hormander_index_is_a_difference_of_maslov_indices(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = common::rng(seed);
        let space = SymplecticSpace::standard(n);
        let u0 = common::random_unitary(&mut rng, n);
        let h = common::random_hermitian(&mut rng, n, 3.0);
        let f = common::unitary_path(u0, h, common::random_hermitian(&mut rng, n, 1.0));
        let (m1, m2) = (common::random_lagrangian_frame(&mut rng, n), common::random_lagrangian_frame(&mut rng, n));
        for t in [0.0, 1.0] {
            prop_assume!(common::transversality(&f(t), &m1) > 1e-3 && common::transversality(&f(t), &m2) > 1e-3);
        }
        let (l1, l2) = (frame(space, f(0.0)), frame(space, f(1.0)));
        let (m1, m2) = (frame(space, m1), frame(space, m2));
        let s = hormander_index(&l1, &l2, &m1, &m2).unwrap();
        let path = LagrangianPath::new(space, (0.0, 1.0), move |t| frame(space, f(t)));
        let mu = |m: &LagrangianFrame| maslov_clm(&LagrangianPath::constant(m.clone()), &path, (0.0, 1.0)).unwrap().index;
        prop_assert_eq!(s, mu(&m2) - mu(&m1));
    }
}
