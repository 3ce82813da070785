use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polymor::interp::{build_bases_tangential, log_spaced};
use polymor::loewner::build_pencil;
use polymor::{make_chafee, make_fhn, reduce, FullModel, InterpolationSet, OrderSpec, ReduceOptions};

fn bases(c: &mut Criterion) {
    let mut group = c.benchmark_group("bases");
    group.sample_size(10);
    for k in [100, 500] {
        let sys = make_chafee(k, 1.0).unwrap();
        let iset = InterpolationSet::siso(log_spaced(1e-3, 1e3, 200).unwrap());
        group.bench_with_input(BenchmarkId::new("chafee_two_sided", k), &k, |b, _| {
            b.iter(|| black_box(build_bases_tangential(&FullModel::new(&sys), &iset, true).unwrap()))
        });
    }
    let fhn = make_fhn(100).unwrap();
    let model = FullModel::new(&fhn);
    let iset = InterpolationSet::siso(log_spaced(1e-2, 1e2, 200).unwrap())
        .with_default_directions(&model)
        .unwrap();
    group.bench_function("fhn_two_sided/100", |b| {
        b.iter(|| black_box(build_bases_tangential(&FullModel::new(&fhn), &iset, true).unwrap()))
    });
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let sys = make_chafee(100, 1.0).unwrap();
    let iset = InterpolationSet::siso(log_spaced(1e-3, 1e3, 200).unwrap());
    let raw = build_bases_tangential(&FullModel::new(&sys), &iset, true).unwrap();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("pencil/chafee_100", |b| {
        b.iter(|| black_box(build_pencil(&sys, &raw.v, &raw.w).unwrap()))
    });
    let opts = ReduceOptions {
        order: OrderSpec::Fixed(10),
        ..Default::default()
    };
    group.bench_function("reduce/chafee_100", |b| b.iter(|| black_box(reduce(&sys, &iset, &opts).unwrap())));
    group.finish();
}

criterion_group!(benches, bases, pipeline);
criterion_main!(benches);
