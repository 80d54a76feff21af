use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relsmooth::solvers::{solve, Method, SolverConfig};
use relsmooth_bench::{geometries, poisson_fixture};
use std::hint::black_box;

fn prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("prox");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for g in geometries(100) {
        let z = g.sample_interior(&mut rng);
        let grad: Vec<f64> = g.sample_interior(&mut rng).iter().map(|v| 0.1 * (v - 0.5)).collect();
        group.bench_function(BenchmarkId::from_parameter(g.label()), |b| {
            b.iter(|| g.linear_bregman_prox(black_box(&z), black_box(&grad), 2.0).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let p = poisson_fixture();
    let x = p.x_feasible().to_vec();
    c.bench_function("poisson_value_and_gradient", |b| {
        b.iter(|| p.objective().value_and_gradient(black_box(&x)).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let p = poisson_fixture();
    let mut group = c.benchmark_group("poisson_50_iterations");
    group.sample_size(20);
    for method in [Method::BpgAdapt, Method::AccBpgm1, Method::AccBpgm2, Method::Aibm] {
        let cfg = SolverConfig::new(method).gamma(1.5).iters(50);
        group.bench_function(BenchmarkId::from_parameter(method), |b| b.iter(|| solve(&p, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, prox, oracle, solvers);
criterion_main!(benches);
