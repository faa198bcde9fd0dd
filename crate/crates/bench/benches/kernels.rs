use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use halfsine::{
    discrete_correlation_sum, empirical_form_factor, kernel_matrix, omega, omega_table, radius_for_tolerance,
    sample_ah_configuration, LatticeSpacing, SeededStream, WindowSampler,
};
use halfsine::form_factor::discriminator_test_function;
use halfsine_bench::representative_functions;

fn gap_probabilities(c: &mut Criterion) {
    let mut group = c.benchmark_group("omega");
    for l in [6usize, 20, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| b.iter(|| omega(black_box(l))));
    }
    group.finish();
    c.bench_function("omega_table/40", |b| b.iter(|| omega_table(black_box(40))));
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("window_spectrum");
    group.sample_size(20);
    for n in [64usize, 256, 1024] {
        let m = kernel_matrix(LatticeSpacing::HALF, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| m.spectrum().unwrap()));
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_window");
    group.sample_size(20);
    for n in [64usize, 256, 1024] {
        let sampler = WindowSampler::new(&kernel_matrix(LatticeSpacing::HALF, n).unwrap()).unwrap();
        let mut r = 0u64;
        group.bench_with_input(BenchmarkId::from_parameter(n), &sampler, |b, s| {
            b.iter(|| {
                r += 1;
                s.sample(&mut SeededStream::new(1, r).rng()).unwrap()
            })
        });
    }
    group.finish();
}

fn correlation_sums(c: &mut Criterion) {
    let (one, two) = representative_functions();
    let mut group = c.benchmark_group("discrete_correlation_sum");
    group.sample_size(10);
    for (name, eta, tol) in [("n1", &one, 1e-9), ("n2", &two, 1e-5)] {
        let r = radius_for_tolerance(eta, LatticeSpacing::HALF, tol).unwrap();
        group.bench_function(name, |b| b.iter(|| discrete_correlation_sum(eta, LatticeSpacing::HALF, r).unwrap()));
    }
    group.finish();
}

fn form_factor(c: &mut Criterion) {
    let config = sample_ah_configuration(4096, SeededStream::new(2, 0)).unwrap();
    let f = discriminator_test_function();
    let mut group = c.benchmark_group("empirical_form_factor");
    group.sample_size(10);
    group.bench_function("4096_sites", |b| b.iter(|| empirical_form_factor(&config, &f, 1000.0, 203.0).unwrap()));
    group.finish();
}

criterion_group!(benches, gap_probabilities, spectrum, sampling, correlation_sums, form_factor);
criterion_main!(benches);
