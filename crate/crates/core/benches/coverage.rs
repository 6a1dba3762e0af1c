use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use mvcheb::mc::{
    empirical_coverage_with, sample_with, verify_bound_with, Execution, FamilyKind, MomentsMode,
    SamplerSpec,
};
use mvcheb::{jacobi_eigendecompose, whitener_for, Matrix, SymMatrix};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    let n = 200_000;
    group.throughput(Throughput::Elements(n as u64));
    for dim in [2, 10] {
        let spec = SamplerSpec::standard(FamilyKind::StudentT, dim, 5.0).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, dim), &dim, |b, _| {
                b.iter(|| sample_with(&spec, n, black_box(7), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn coverage(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_coverage");
    let n = 200_000;
    group.throughput(Throughput::Elements(n as u64));
    for dim in [2, 10] {
        let spec = SamplerSpec::standard(FamilyKind::Gaussian, dim, 5.0).unwrap();
        let data = sample_with(&spec, n, 1, Execution::default()).unwrap();
        let w = whitener_for(&spec.true_model().unwrap()).unwrap();
        let eps = 4.0 * dim as f64;
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, dim), &dim, |b, _| {
                b.iter(|| empirical_coverage_with(&w, &data, black_box(eps), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_bound");
    group.sample_size(10);
    let spec = SamplerSpec::standard(FamilyKind::GaussianMixture, 5, 5.0).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                verify_bound_with(
                    &spec,
                    &[10.0, 20.0, 50.0],
                    100_000,
                    3,
                    MomentsMode::Fitted,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn jacobi(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi");
    for n in [5, 20, 50] {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ((i + j) as f64).cos() + if i == j { n as f64 } else { 0.0 };
            }
        }
        let s = SymMatrix::new(m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| jacobi_eigendecompose(black_box(s)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, coverage, verify, jacobi);
criterion_main!(benches);
