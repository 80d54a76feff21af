use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relsmooth::geometry::tse_sides;
use relsmooth::oracle::{verify_conformity, DeltaSchedule, NoiseModel, Oracle};
use relsmooth::problems::{diagonal_quadratic, generate_poisson, poisson_problem};
use relsmooth::solvers::{audits, solve, theoretical_bound, BoundParams, Method, SolverConfig};
use relsmooth::Geometry;

fn geometry(which: usize, n: usize) -> Geometry {
    match which % 5 {
        0 => Geometry::euclidean(n),
        1 => Geometry::euclidean_orthant(n),
        2 => Geometry::entropy_simplex(n),
        3 => Geometry::log_barrier(n),
        _ => Geometry::log_barrier_simplex(n),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_nonnegative_and_vanishes_on_the_diagonal(which in 0usize..5, n in 1usize..12, seed in any::<u64>()) {
        let g = geometry(which, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = g.sample_interior(&mut rng);
        let y = g.sample_interior(&mut rng);
        prop_assert!(g.divergence(&x, &y).unwrap() >= 0.0);
        prop_assert!(g.divergence(&x, &x).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn prox_satisfies_its_optimality_conditions(
        which in 0usize..5,
        n in 2usize..10,
        seed in any::<u64>(),
        scale in 0.01f64..3.0,
        lambda in 0.1f64..10.0,
    ) {
        let g = geometry(which, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = g.sample_interior(&mut rng);
        let grad: Vec<f64> = g.sample_interior(&mut rng).iter().map(|v| scale * (v - 0.3)).collect();
        if let Ok(x) = g.linear_bregman_prox(&z, &grad, lambda) {
            prop_assert!(g.kkt_residual(&z, &grad, lambda, &x) <= 1e-10);
            // Nothing beats the prox on its own objective.
            let obj = |w: &[f64]| -> f64 {
                grad.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + lambda * g.divergence(w, &z).unwrap()
            };
            let other = g.sample_interior(&mut rng);
            prop_assert!(obj(&x) <= obj(&other) + 1e-9 * (1.0 + obj(&other).abs()));
        }
        let fixed = g.linear_bregman_prox(&z, &vec![0.0; n], lambda).unwrap();
        for (a, b) in fixed.iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn euclidean_scaling_is_exact_at_two(seed in any::<u64>(), theta in 0.001f64..1.0) {
        let g = Geometry::euclidean(5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, z, zt) = (g.sample_interior(&mut rng), g.sample_interior(&mut rng), g.sample_interior(&mut rng));
        let (lhs, rhs) = tse_sides(&g, &x, &z, &zt, theta, 2.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn entropy_scaling_holds_at_one(seed in any::<u64>(), theta in 0.001f64..1.0) {
        let g = Geometry::entropy_simplex(6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, z, zt) = (g.sample_interior(&mut rng), g.sample_interior(&mut rng), g.sample_interior(&mut rng));
        let (lhs, rhs) = tse_sides(&g, &x, &z, &zt, theta, 1.0).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-15);
    }

    #[test]
    fn value_shrink_oracles_conform(seed in any::<u64>(), level in 0.0f64..1.0) {
        let p = poisson_problem(generate_poisson(8, 5, seed));
        let mut oracle = Oracle::new(&p, NoiseModel::value_shrink(DeltaSchedule::Uniform { mean: level }, seed));
        let report = verify_conformity(&mut oracle, p.l_cert(), 50, seed);
        prop_assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn exact_bounds_decrease(method_idx in 0usize..5, gamma in 1.05f64..2.0, p in 1.0f64..2.0) {
        let method = [Method::Bpg, Method::AdapFgm, Method::AccBpgm1, Method::AccBpgm2, Method::Aibm][method_idx];
        let gamma = if method == Method::AdapFgm { 2.0 } else { gamma };
        let deltas = vec![0.0; 60];
        let mut a = vec![0.0];
        for _ in 0..60 {
            let last: f64 = *a.last().unwrap();
            a.push(last + (1.0 + (1.0 + 4.0 * last).sqrt()) / 2.0);
        }
        let params = BoundParams { l: 1.0, radius_sq: 0.5, gamma, p, deltas: &deltas, a_history: &a };
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let b = theoretical_bound(method, &params, k).unwrap();
            prop_assert!(b > 0.0 && b <= prev, "{method} k={k}: {b} after {prev}");
            prev = b;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn traces_are_contiguous_and_audits_hold(method_idx in 0usize..7, seed in 0u64..1000, gamma in 1.2f64..2.0) {
        let method = Method::ALL[method_idx];
        let gamma = if method == Method::AdapFgm { 2.0 } else { gamma };
        let h: Vec<f64> = (0..8).map(|i| 0.05 + (seed as f64 * 0.37 + i as f64).sin().abs()).collect();
        let c: Vec<f64> = (0..8).map(|i| ((seed + i) % 5) as f64 - 2.0).collect();
        let q = diagonal_quadratic(h, c);
        let cfg = SolverConfig::new(method).gamma(gamma).iters(40).assert_bounds(true);
        let t = solve(&q, &cfg).unwrap();
        prop_assert!(t.records.iter().enumerate().all(|(i, r)| r.k == i));
        prop_assert!(t.records.windows(2).all(|w| w[1].oracle_calls >= w[0].oracle_calls));
        prop_assert!(t.audits_pass(), "{:?}", t.audits);
        if method == Method::AccBpgm2 {
            prop_assert!(t.records.windows(2).all(|w| w[1].l >= w[0].l));
            prop_assert!(t.audit_entry(audits::L_NONDECREASING).is_some());
        }
        if matches!(method, Method::Aibm | Method::AibmVarP) {
            prop_assert!(t.audit_entry(audits::ESTIMATING_SEQUENCE).unwrap().passed());
        }
        // Line searches stay inside the doubling bracket.
        let cap = 2.0 * q.l_cert().max(t.records[0].l);
        prop_assert!(t.records[1..].iter().all(|r| r.l <= cap * (1.0 + 1e-12)));
    }

    #[test]
    fn seeded_noisy_runs_replay(seed in any::<u64>(), level in 0.001f64..0.2) {
        let p = poisson_problem(generate_poisson(10, 6, 3));
        let noise = NoiseModel::value_shrink(DeltaSchedule::Uniform { mean: level }, seed);
        let cfg = SolverConfig::new(Method::Aibm).gamma(1.5).iters(25).noise(noise);
        let a = solve(&p, &cfg).unwrap();
        let b = solve(&p, &cfg).unwrap();
        let body = |csv: String| csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        prop_assert_eq!(body(a.to_csv(false)), body(b.to_csv(false)));
    }
}
