use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vpmin::kinetic::global_reduce;
use vpmin::minimizer::{minimize, ScfOptions};
use vpmin::rearrange::{interaction, rearrange, Kernel};
use vpmin::sampling::random_cartesian;
use vpmin::{epot, epot_cutoff, solve_potential, Spacing};
use vpmin_bench::{gaussian, unit_params};

fn gravity(c: &mut Criterion) {
    let rho = gaussian(8000);
    c.bench_function("solve_potential n=8000", |b| {
        b.iter(|| solve_potential(black_box(&rho)))
    });
    c.bench_function("epot n=8000", |b| b.iter(|| epot(black_box(&rho))));
    let small = gaussian(500);
    c.bench_function("epot_cutoff n=500", |b| b.iter(|| epot_cutoff(black_box(&small), 0.5)));
}

fn scf(c: &mut Criterion) {
    let mut g = c.benchmark_group("scf");
    g.sample_size(10);
    for mu in [0.5, 2.5] {
        let p = unit_params(mu);
        g.bench_function(format!("minimize mu={mu} n=2000"), |b| {
            b.iter(|| minimize(&p, 20.0, 2000, Spacing::Uniform, &ScfOptions::default()))
        });
    }
    g.finish();
}

fn reduction(c: &mut Criterion) {
    let rho = gaussian(400);
    let mut g = c.benchmark_group("reduction");
    g.sample_size(10);
    g.bench_function("global_reduce n=400", |b| {
        b.iter(|| global_reduce(black_box(&rho), 1.0, 1.5))
    });
    g.finish();
}

fn riesz(c: &mut Criterion) {
    let rho = random_cartesian(12, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).expect("grid");
    c.bench_function("rearrange 12^3", |b| b.iter(|| rearrange(black_box(&rho))));
    c.bench_function("interaction 12^3", |b| {
        b.iter(|| interaction(black_box(&rho), black_box(&rho), Kernel::Coulomb))
    });
}

criterion_group!(benches, gravity, scf, reduction, riesz);
criterion_main!(benches);
