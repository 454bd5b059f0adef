use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use orbit_offload::harness::instances::{random_instance, InstanceShape};
use orbit_offload::oracle::{exact_solve, OracleLimits};
use orbit_offload::{ao2, ao2_parallel};
use orbit_offload_bench::interval_state;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_ao2(c: &mut Criterion) {
    let mut group = c.benchmark_group("ao2");
    for planes in [72u32, 108, 144] {
        let state = interval_state(planes, 10);
        let n_sats = planes * 22;
        group.throughput(Throughput::Elements(state.tasks.len() as u64));
        group.bench_with_input(BenchmarkId::new("sequential", n_sats), &state, |b, s| {
            b.iter_batched(|| s.clone(), |mut s| ao2(&mut s), BatchSize::LargeInput)
        });
        group.bench_with_input(
            BenchmarkId::new("four_pipelines", n_sats),
            &state,
            |b, s| {
                b.iter_batched(
                    || s.clone(),
                    |mut s| ao2_parallel(&mut s, 4),
                    BatchSize::LargeInput,
                )
            },
        );
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let instances: Vec<_> = (0..16)
        .map(|_| random_instance(&mut rng, InstanceShape::ORACLE))
        .collect();
    c.bench_function("oracle/16_small_instances", |b| {
        b.iter(|| {
            for s in &instances {
                exact_solve(s, OracleLimits::default()).unwrap();
            }
        })
    });
}

criterion_group!(benches, bench_ao2, bench_oracle);
criterion_main!(benches);
