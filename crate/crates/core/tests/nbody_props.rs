mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use symind::nbody::{
    bbar_spectrum, central_configuration, gradient, hessian, potential, seed, Configuration, MassSystem,
};

fn random_config(seed: u64, bodies: usize, dim: usize) -> Configuration {
    let mut rng = common::rng(seed);
    let masses: Vec<f64> = (0..bodies).map(|_| rng.random_range(0.5..2.0)).collect();
    // bodies on a jittered circle (a jittered line in one dimension) stay apart
    let q = DVector::from_fn(bodies * dim, |k, _| {
        let (i, c) = (k / dim, k % dim);
        let angle = std::f64::consts::TAU * i as f64 / bodies as f64;
        let base = match (dim, c) {
            (1, _) => i as f64,
            (_, 0) => angle.cos(),
            (_, 1) => angle.sin(),
            _ => 0.0,
        };
        base + rng.random_range(-0.2..0.2)
    });
    Configuration::new(MassSystem::new(masses, dim).unwrap(), q).unwrap()
}

fn independent_potential(config: &Configuration) -> impl Fn(&DVector<f64>) -> f64 + '_ {
    move |q| common::newton_potential(&config.system.masses, config.system.dimension, q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_matches_the_independent_sum(s in any::<u64>(), bodies in 2usize..=5, dim in 1usize..=3) {
        let c = random_config(s, bodies, dim);
        let u = potential(&c).unwrap();
        prop_assert!((u - independent_potential(&c)(&c.positions)).abs() < 1e-12 * u);
    }

    #[test]
    fn derivatives_match_finite_differences(s in any::<u64>(), bodies in 2usize..=5, dim in 1usize..=3) {
        let c = random_config(s, bodies, dim);
        let f = independent_potential(&c);
        let g = gradient(&c).unwrap();
        let g_fd = common::fd_gradient(&f, &c.positions, 1e-6);
        prop_assert!((&g - &g_fd).norm() < 1e-6 * g.norm());
        let h = hessian(&c).unwrap();
        let h_fd = common::fd_hessian(&f, &c.positions, 1e-3);
        prop_assert!(common::rel_err(&h, &h_fd) < 1e-6, "relative error {:e}", common::rel_err(&h, &h_fd));
    }

    #[test]
    fn derivatives_are_homogeneous(s in any::<u64>(), bodies in 2usize..=5, dim in 1usize..=3, mu in 0.2f64..5.0) {
        let c = random_config(s, bodies, dim);
        let scaled = c.scaled(mu);
        prop_assert!((potential(&scaled).unwrap() - potential(&c).unwrap() / mu).abs() < 1e-12 * potential(&scaled).unwrap());
        let g = gradient(&c).unwrap() / (mu * mu);
        prop_assert!((gradient(&scaled).unwrap() - &g).norm() < 1e-10 * g.norm());
        let h = hessian(&c).unwrap() / mu.powi(3);
        prop_assert!(common::rel_err(&hessian(&scaled).unwrap(), &h) < 1e-10);
    }
}

fn rotated(c: &Configuration, angle: f64, shift: [f64; 2]) -> Configuration {
    let mut q = c.positions.clone();
    for i in 0..c.system.n_bodies() {
        let (x, y) = (q[2 * i], q[2 * i + 1]);
        q[2 * i] = angle.cos() * x - angle.sin() * y + shift[0];
        q[2 * i + 1] = angle.sin() * x + angle.cos() * y + shift[1];
    }
    Configuration::new(c.system.clone(), q).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn central_configurations_are_critical(name in prop_oneof![Just("two-body"), Just("lagrange"), Just("euler"), Just("square")], s in any::<u64>()) {
        let mut rng = common::rng(s);
        let start = seed(name).unwrap();
        let jitter = DVector::from_fn(start.positions.len(), |_, _| rng.random_range(-0.02..0.02));
        let start = Configuration::new(start.system.clone(), &start.positions + jitter).unwrap();
        let cc = central_configuration(&start, 1e-12).unwrap();
        let q = &cc.config;
        let m = q.system.mass_diagonal();
        prop_assert!((m.component_mul(&q.positions).dot(&q.positions) - 1.0).abs() < 1e-9);
        let f = independent_potential(q);
        let grad = common::fd_gradient(&f, &q.positions, 1e-6);
        let residual = grad + m.component_mul(&q.positions) * f(&q.positions);
        prop_assert!(residual.norm() < 1e-7, "residual {:e}", residual.norm());
    }

    #[test]
    fn bbar_spectrum_is_invariant(name in prop_oneof![Just("two-body"), Just("lagrange"), Just("euler")], mu in 0.3f64..4.0, angle in 0.0f64..6.2, dx in -1.0f64..1.0) {
        let cc = central_configuration(&seed(name).unwrap(), 1e-12).unwrap();
        let base = bbar_spectrum(&cc).unwrap();
        let moved = rotated(&cc.config.scaled(mu), angle, [dx, -0.5 * dx]);
        let again = central_configuration(&moved, 1e-12).unwrap();
        let spectrum = bbar_spectrum(&again).unwrap();
        prop_assert_eq!(spectrum.len(), base.len());
        for (a, b) in spectrum.iter().zip(&base) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
