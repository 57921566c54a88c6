use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gcstar_core::convalg::{convolve, cstar_norm};
use gcstar_core::crossed::{crossed_product, InverseSemigroup};
use gcstar_core::fixtures::load_fixture;
use gcstar_core::intdis::{disintegrate, integrate_rep};
use gcstar_core::random::rng_from_seed;
use gcstar_core::reps::regular_representation;
use gcstar_core::ConvElement;
use std::hint::black_box;
use std::sync::Arc;

const SIZES: [&str; 3] = ["pair:4", "pair:8", "group:16"];

fn convolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("convolve");
    for name in SIZES {
        let mg = load_fixture(name).unwrap();
        let mut rng = rng_from_seed(1);
        let (f, g) = (ConvElement::random(mg.n_arrows(), &mut rng), ConvElement::random(mg.n_arrows(), &mut rng));
        group.bench_with_input(BenchmarkId::from_parameter(name), &mg, |b, mg| b.iter(|| convolve(mg, black_box(&f), black_box(&g))));
    }
    group.finish();
}

fn norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("cstar_norm");
    for name in SIZES {
        let mg = load_fixture(name).unwrap();
        let f = ConvElement::random(mg.n_arrows(), &mut rng_from_seed(2));
        group.bench_with_input(BenchmarkId::from_parameter(name), &mg, |b, mg| b.iter(|| cstar_norm(mg, black_box(&f)).unwrap()));
    }
    group.finish();
}

fn integration(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_disintegrate");
    group.sample_size(20);
    for name in ["W2", "pair:4", "group:8"] {
        let rep = regular_representation(Arc::new(load_fixture(name).unwrap()));
        group.bench_with_input(BenchmarkId::new("integrate", name), &rep, |b, rep| b.iter(|| integrate_rep(rep).unwrap()));
        let l = integrate_rep(&rep).unwrap();
        group.bench_with_input(BenchmarkId::new("disintegrate", name), &l, |b, l| b.iter(|| disintegrate(l, 1e-9).unwrap()));
    }
    group.finish();
}

fn crossed(c: &mut Criterion) {
    let mut group = c.benchmark_group("crossed_product");
    group.sample_size(20);
    for name in ["X2", "pair:3"] {
        let mg = load_fixture(name).unwrap();
        let s = InverseSemigroup::all_bisections(&mg.g).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &s, |b, s| b.iter(|| crossed_product(s).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, convolution, norms, integration, crossed);
criterion_main!(benches);
