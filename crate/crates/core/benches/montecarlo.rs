use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fvml_conc::montecarlo::{run, Design, McConfig};

fn config(design: Design, workers: Option<usize>) -> McConfig {
    let mut cfg = McConfig::new(2, design, 1);
    cfg.replications = 500;
    cfg.grid = vec![0.0, 5.0, 10.0];
    cfg.workers = workers;
    cfg
}

fn engines(c: &mut Criterion) {
    let designs = [
        ("rayleigh-n200", Design::Rayleigh { n: 200 }),
        ("homogeneity-100x150", Design::Homogeneity { kappa: 5.0, n1: 100, n2: 150, shift_step: 0.1 }),
    ];
    let mut group = c.benchmark_group("power-curve");
    group.sample_size(10);
    for (name, design) in designs {
        group.bench_with_input(BenchmarkId::new("sequential", name), &design, |b, d| {
            let cfg = config(d.clone(), Some(1));
            b.iter(|| run(&cfg).unwrap())
        });
        // without the `parallel` feature this falls back to the sequential loop
        group.bench_with_input(BenchmarkId::new("parallel", name), &design, |b, d| {
            let cfg = config(d.clone(), None);
            b.iter(|| run(&cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, engines);
criterion_main!(benches);
