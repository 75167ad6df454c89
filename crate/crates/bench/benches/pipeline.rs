use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use csanitize_bench::{document, world};
use csanitize_core::{build_index, detect, CanonicalTerm, ContextUnit, CorpusIndex, SanitizationPolicy, Sanitizer};
use std::hint::black_box;

fn policy(group_max: usize) -> SanitizationPolicy {
    SanitizationPolicy::new([CanonicalTerm::new("entity").unwrap()], 1.5)
        .unwrap()
        .with_context_unit(ContextUnit::Sentence)
        .with_group_max(group_max)
        .unwrap()
}

fn index_build(c: &mut Criterion) {
    let w = world(8192, 2048, 1);
    c.bench_function("index/build 2048 contexts", |b| {
        b.iter(|| build_index(black_box(&w.corpus), ContextUnit::Document, &w.taxonomy).unwrap())
    });
    let bytes = w.index.to_bytes();
    c.bench_function("index/decode", |b| b.iter(|| CorpusIndex::from_bytes(black_box(&bytes)).unwrap()));
}

fn sanitize_scaling(c: &mut Criterion) {
    let w = world(8192, 2048, 1);
    let sanitizer = Sanitizer::new(&w.index, &w.taxonomy, &w.vocab).unwrap();
    let mut group = c.benchmark_group("sanitize");
    for distinct in [1000, 2000, 4000] {
        let doc = document(&w, distinct, ContextUnit::Sentence);
        group.throughput(Throughput::Elements(distinct as u64));
        for m in [1, 2] {
            let p = policy(m);
            group.bench_with_input(BenchmarkId::new(format!("m={m}"), distinct), &doc, |b, doc| {
                b.iter(|| sanitizer.sanitize(black_box(doc), &p).unwrap())
            });
        }
    }
    group.finish();
}

fn detection(c: &mut Criterion) {
    let w = world(8192, 2048, 1);
    let doc = document(&w, 2000, ContextUnit::Sentence);
    let mut group = c.benchmark_group("detect");
    for m in [1, 2, 3] {
        let p = policy(m);
        group.bench_function(BenchmarkId::new("group_max", m), |b| {
            b.iter(|| detect(black_box(&doc), &w.index, &p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, index_build, sanitize_scaling, detection);
criterion_main!(benches);
