use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use swingmeter_bench::bench_dataset;
use swingmeter_core::pipeline::{analyze, AnalyzeOptions};
use swingmeter_core::preprocess::{interconnection_frequency, regional_frequency};
use swingmeter_core::rocof::peak_rocof;
use swingmeter_core::{detect_onset, generate};

fn bench_generator(c: &mut Criterion) {
    c.bench_function("synth_generate_7_sensors", |b| {
        let spec = bench_dataset(7, 1).truth.spec;
        b.iter(|| generate(&spec).unwrap());
    });
}

fn bench_onset_scan(c: &mut Criterion) {
    let out = bench_dataset(7, 2);
    let region = out.region.to_region_definition();
    let (regional, _) = regional_frequency(&out.bundle, &region).unwrap();
    let span = (out.event.approx_time - 30.0, out.event.approx_time + 30.0);
    c.bench_function("onset_scan_600_candidates", |b| {
        b.iter(|| detect_onset(&regional, span, 0.5).unwrap());
    });
}

fn bench_peak_rocof(c: &mut Criterion) {
    let out = bench_dataset(7, 3);
    let region = out.region.to_region_definition();
    let (regional, _) = regional_frequency(&out.bundle, &region).unwrap();
    let onset = detect_onset(
        &regional,
        (out.event.approx_time - 30.0, out.event.approx_time + 30.0),
        0.5,
    )
    .unwrap();
    c.bench_function("peak_rocof_half_second", |b| {
        b.iter(|| peak_rocof(&regional, onset.onset_time, 0.1, 0.5).unwrap());
    });
}

fn bench_median_aggregation(c: &mut Criterion) {
    let out = bench_dataset(20, 4);
    c.bench_function("median_aggregation_20_sensors", |b| {
        b.iter(|| interconnection_frequency(&out.bundle).unwrap());
    });
}

fn bench_full_pipeline(c: &mut Criterion) {
    let out = bench_dataset(7, 5);
    let region = out.region.to_region_definition();
    c.bench_function("pipeline_end_to_end_7_sensors", |b| {
        b.iter_batched(
            || out.bundle.clone(),
            |bundle| analyze(&bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap(),
            BatchSize::LargeInput,
        );
    });
}

criterion_group!(
    benches,
    bench_generator,
    bench_onset_scan,
    bench_peak_rocof,
    bench_median_aggregation,
    bench_full_pipeline
);
criterion_main!(benches);
