mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use symind::bessel::{classify, r_of_q, singular_solutions, zero_sequence, BesselEnd, BesselMatrixProblem, MorseClass};
use symind::report::Verdict;
use symind::sturm::catalog::bessel_problem;
use symind::sturm::{
    boundary_bracket, conjugate_points, fundamental_solution, morse_index_dirichlet, BoundaryData, IntegratorOptions,
    SturmOptions, DEFAULT_SCHEDULE,
};
use symind::symplectic::SymplecticSpace;

/// Solution matrix with columns `(y', y)` of the pair at `t`.
fn pair_matrix(r: f64, t: f64) -> DMatrix<f64> {
    let s = singular_solutions(r, t);
    DMatrix::from_column_slice(2, 2, &[s.dy1, s.y1, s.dy2, s.y2])
}

fn q_strategy() -> impl Strategy<Value = f64> {
    // away from the threshold −1/4, below the limit-point value 3/4
    prop_oneof![-12.0f64..-0.3, -0.2f64..0.74]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solution_pair_solves_the_equation(q in q_strategy(), t in 0.01f64..1.0) {
        let r = r_of_q(q).unwrap();
        let h = 1e-4 * t;
        for k in 0..2 {
            let y = |t: f64| pair_matrix(r, t)[(1, k)];
            let second = (y(t + h) - 2.0 * y(t) + y(t - h)) / (h * h);
            let scale = (q / (t * t) * y(t)).abs() + second.abs() + 1.0 / (t * t);
            prop_assert!((second - q / (t * t) * y(t)).abs() < 1e-5 * scale);
            let slope = (y(t + h) - y(t - h)) / (2.0 * h);
            let dy = pair_matrix(r, t)[(0, k)];
            prop_assert!((slope - dy).abs() < 1e-6 * (dy.abs() + 1.0 / t));
        }
    }

    #[test]
    fn solution_pair_wronskian_is_minus_one(q in q_strategy(), t in 1e-6f64..1.0) {
        let r = r_of_q(q).unwrap();
        let s = singular_solutions(r, t);
        let w = boundary_bracket(&BoundaryData::scalar(s.y1, s.dy1), &BoundaryData::scalar(s.y2, s.dy2));
        let scale = (s.dy1 * s.y2).abs() + (s.y1 * s.dy2).abs();
        prop_assert!((w + 1.0).abs() < 1e-12 * scale.max(1.0), "bracket {w}");
    }

    #[test]
    fn integrated_flow_reproduces_the_pair(q in q_strategy(), log_delta in -4.0f64..-1.0) {
        let r = r_of_q(q).unwrap();
        let delta = 10f64.powf(log_delta);
        let p = bessel_problem(q).unwrap().restricted((delta, 1.0));
        let fs = fundamental_solution(&p, 1.0, (delta, 1.0), &IntegratorOptions::default()).unwrap();
        let at_one = pair_matrix(r, 1.0);
        for k in 0..=20 {
            let t = delta.powf(k as f64 / 20.0);
            let exact = pair_matrix(r, t);
            let err = common::rel_err(&(fs.gamma(t) * &at_one), &exact);
            prop_assert!(err < 1e-8, "t = {t}: relative error {err:e}");
        }
    }

    #[test]
    fn conjugate_points_are_the_zero_sequence(q in -60.0f64..-1.0, log_delta in -4.0f64..-1.5) {
        let delta = 10f64.powf(log_delta);
        let zeros = zero_sequence(q, (delta, 1.0)).unwrap();
        prop_assume!(zeros.iter().all(|z| z / delta > 1.0 + 1e-4));
        let p = bessel_problem(q).unwrap().restricted((delta, 1.0));
        let dir = SymplecticSpace::standard(1).dirichlet();
        let mut points = conjugate_points(&p, 1.0, &dir, &dir, (delta, 1.0), &SturmOptions::default()).unwrap();
        points.sort_by(|a, b| b.t.total_cmp(&a.t));
        prop_assert_eq!(points.len(), zeros.len());
        for (c, z) in points.iter().zip(&zeros) {
            prop_assert!((c.t - z).abs() < 1e-6 * z, "{} vs {}", c.t, z);
            prop_assert_eq!(c.multiplicity, 1);
        }
    }

    #[test]
    fn zero_sequence_is_geometric(q in -60.0f64..-0.3, c in 0.2f64..1.0) {
        let nu = (-0.25 - q).sqrt();
        let zeros = zero_sequence(q, (1e-9, c)).unwrap();
        for (k, z) in zeros.iter().enumerate() {
            // √t·sin(ν ln(t/c)) vanishes at z
            prop_assert!((nu * (z / c).ln()).sin().abs() < 1e-9);
            prop_assert!((z - c * (-((k + 1) as f64) * std::f64::consts::PI / nu).exp()).abs() <= 1e-12 * z);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn classification_agrees_with_truncated_counts(a in q_strategy(), b in q_strategy()) {
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]));
        let class = classify(&BesselMatrixProblem::constant(r, BesselEnd::ZeroEnd)).unwrap();
        for d in &class.directions {
            let report = morse_index_dirichlet(&bessel_problem(d.eigenvalue).unwrap(), &DEFAULT_SCHEDULE).unwrap();
            match d.verdict {
                MorseClass::FiniteMorse => prop_assert_eq!(report.verdict, Verdict::Finite { value: 0 }),
                MorseClass::InfiniteMorse => prop_assert_eq!(report.verdict, Verdict::Infinite),
                MorseClass::Threshold => prop_assert!(false, "threshold not expected for {}", d.eigenvalue),
            }
        }
        let expect_infinite = a < -0.25 || b < -0.25;
        prop_assert_eq!(class.overall == MorseClass::InfiniteMorse, expect_infinite);
    }
}
