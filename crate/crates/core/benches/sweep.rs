use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use agentwire::scenarios::attacks::downgrade;
use agentwire::sweep::{sweep_parallel, sweep_sequential};

fn downgrade_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("downgrade_sweep");
    group.sample_size(10);
    for n in [16u64, 64] {
        let seeds: Vec<u64> = (0..n).collect();
        let run = |s| downgrade(s).expect("defence holds").weak_locks;
        group.bench_with_input(BenchmarkId::new("sequential", n), &seeds, |b, seeds| {
            b.iter(|| sweep_sequential(seeds, run))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &seeds, |b, seeds| {
            b.iter(|| sweep_parallel(seeds, run))
        });
    }
    group.finish();
}

fn travel_sweep(c: &mut Criterion) {
    use agentwire::scenarios::{run_travel_demo, TravelOptions};
    let mut group = c.benchmark_group("travel_sweep");
    group.sample_size(10);
    let seeds: Vec<u64> = (0..32).collect();
    let run = |seed| {
        let opts = TravelOptions { seed, ..TravelOptions::repeated(20) };
        run_travel_demo(&opts).expect("travel flow").confirmations.len()
    };
    group.bench_function("sequential", |b| b.iter(|| sweep_sequential(&seeds, run)));
    group.bench_function("parallel", |b| b.iter(|| sweep_parallel(&seeds, run)));
    group.finish();
}

criterion_group!(benches, downgrade_sweep, travel_sweep);
criterion_main!(benches);
