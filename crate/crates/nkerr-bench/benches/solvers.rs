use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nkerr_bench::blockade_params;
use nkerr_core::algebra::expm;
use nkerr_core::kerr::KerrParams;
use nkerr_core::nsystem::build_liouvillian;
use nkerr_core::observables::{squeezing_spectrum, Quadrature};
use nkerr_core::solver::steady_state;
use num_complex::Complex64 as C64;

fn bench_liouvillian_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("liouvillian_assembly");
    for n_max in [4usize, 8, 12] {
        let params = blockade_params(n_max);
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &params, |b, p| {
            b.iter(|| build_liouvillian(p).unwrap())
        });
    }
    group.finish();
}

fn bench_steady_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("steady_state");
    group.sample_size(10);
    for n_max in [4usize, 8, 12] {
        let l = build_liouvillian(&blockade_params(n_max)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &l, |b, l| {
            b.iter(|| steady_state(l).unwrap())
        });
    }
    group.finish();
}

fn bench_spectral_point(c: &mut Criterion) {
    let mut group = c.benchmark_group("squeezing_spectrum_point");
    group.sample_size(10);
    let l = build_liouvillian(&blockade_params(6)).unwrap();
    let ss = steady_state(&l).unwrap();
    group.bench_function("fock6_one_omega", |b| {
        b.iter(|| squeezing_spectrum(&l, &ss, 1.0, Quadrature::Auto, &[1.5]).unwrap())
    });
    group.finish();
}

fn bench_expm(c: &mut Criterion) {
    let mut group = c.benchmark_group("expm");
    group.sample_size(10);
    let l = build_liouvillian(&blockade_params(6)).unwrap();
    let scaled = l.matrix.mapv(|z| z * C64::new(0.1, 0.0));
    group.bench_function("fock6_dt0.1", |b| b.iter(|| expm(&scaled).unwrap()));
    group.finish();
}

fn bench_kerr_g2(c: &mut Criterion) {
    let mut group = c.benchmark_group("kerr_reference");
    let p = KerrParams::resonant(350.0, 1.0, 0.05);
    group.bench_function("g2_zero", |b| {
        b.iter(|| nkerr_core::kerr::kerr_g2_zero(&p).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_liouvillian_assembly,
    bench_steady_state,
    bench_spectral_point,
    bench_expm,
    bench_kerr_g2
);
criterion_main!(benches);
