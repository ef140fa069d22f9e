use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use voltide::cgc::{bootstrap_cgc, CgcConfig};
use voltide::factors::{horns_parallel_analysis, FactorId, Market};
use voltide::market_data::Metric;
use voltide::simulate::planted_lead_panels;
use voltide::Execution;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn cgc_bootstrap(c: &mut Criterion) {
    let causer = FactorId::new(Market::Stablecoin, Metric::DeltaSigmaUp);
    let target = FactorId::new(Market::Crypto, Metric::DeltaSigmaUp);
    let panels = planted_lead_panels(causer, target, 500, 3, 0.5, 1).unwrap();
    let x = &panels.panels[&causer].columns[0];
    let y = &panels.panels[&target].columns[0];
    let cfg = CgcConfig {
        n_bootstrap: 100,
        ..Default::default()
    };
    let mut group = c.benchmark_group("cgc_bootstrap");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| bootstrap_cgc(y, x, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn horn(c: &mut Criterion) {
    let causer = FactorId::new(Market::Crypto, Metric::DeltaSigmaDown);
    let target = FactorId::new(Market::Stablecoin, Metric::DeltaSigmaDown);
    let panels = planted_lead_panels(causer, target, 1461, 4, 0.0, 2).unwrap();
    let panel = &panels.panels[&causer];
    let mut group = c.benchmark_group("horn");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| horns_parallel_analysis(panel, 200, 0.95, 3, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cgc_bootstrap, horn);
criterion_main!(benches);
