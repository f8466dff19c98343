use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gauge_lattice::scenario::{preset, run_scenario};
use gauge_lattice::Execution;

fn presets(c: &mut Criterion) {
    let mut group = c.benchmark_group("preset");
    group.sample_size(10);
    for name in ["fig8-laughlin-pump", "fig10-ladder-current", "fig12-nodal-map"] {
        let cfg = preset(name).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(name, format!("{exec:?}")), &exec, |b, &exec| {
                b.iter(|| run_scenario(&cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, presets);
criterion_main!(benches);
