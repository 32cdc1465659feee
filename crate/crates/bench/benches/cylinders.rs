use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twistlab_core::conditions::check_pseudo_markov;
use twistlab_core::cylinders::{cylinders_of_order, CylinderOptions};
use twistlab_core::SystemSpec;

fn enumerate(c: &mut Criterion) {
    let opts = CylinderOptions::default();
    let mut group = c.benchmark_group("cylinders_of_order");
    group.sample_size(20);
    for (id, m) in [("beta:golden", 12), ("beta:1.9", 10), ("ifs:cantor3", 10), ("gauss", 2)] {
        let sys = SystemSpec::parse(id).unwrap();
        group.bench_with_input(BenchmarkId::new(id, m), &m, |b, &m| {
            b.iter(|| cylinders_of_order(&sys, m, &opts).unwrap().len())
        });
    }
    group.finish();
}

fn pseudo_markov(c: &mut Criterion) {
    let sys = SystemSpec::parse("beta:tribonacci").unwrap();
    c.bench_function("pseudo_markov_tribonacci", |b| b.iter(|| check_pseudo_markov(&sys).unwrap().holds));
}

criterion_group!(benches, enumerate, pseudo_markov);
criterion_main!(benches);
