use carleman_core::io::grid_points;
use carleman_core::wavelet::MotherWavelet;
use carleman_core::{fixtures, Orientation, Pipeline, PipelineConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn mother_eval(c: &mut Criterion) {
    let mother = MotherWavelet::new(3);
    c.bench_function("mother eval, i = 2", |b| {
        b.iter(|| mother.eval(black_box(1.37), 2).unwrap())
    });
}

fn pipeline_build(c: &mut Criterion) {
    let env = fixtures::desk_rank_two(1);
    let config = PipelineConfig::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("build desk fixture", |b| {
        b.iter(|| Pipeline::build(black_box(&env), &config).unwrap())
    });
    group.finish();
}

fn grid_eval(c: &mut Criterion) {
    let p = Pipeline::build(&fixtures::desk_rank_two(1), &PipelineConfig::default()).unwrap();
    let pts = grid_points(64, 10.0);
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    group.bench_function("64x64 kernel values", |b| {
        b.iter(|| {
            p.model
                .grid(&p.wavelets, Orientation::Kernel, &pts, &pts, 0, 0, p.eval_mode())
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, mother_eval, pipeline_build, grid_eval);
criterion_main!(benches);
