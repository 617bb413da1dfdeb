use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tod::harness::Family;
use tod::{IndexMode, Want};
use tod_bench::Workload;

fn retrieval(c: &mut Criterion) {
    for family in [Family::Swap, Family::Poly] {
        let workload = Workload::new(family, 2000, 7);
        let mut group = c.benchmark_group(format!("retrieval/{}", family.name()));
        group.throughput(Throughput::Elements(workload.queries() as u64));
        for mode in IndexMode::ALL {
            // warm diagrams: every node on the query paths is already specialized
            let mut warm = workload.index(mode);
            workload.replay(&mut warm, Want::All);
            group.bench_function(BenchmarkId::new("warm", mode), |b| {
                b.iter(|| workload.replay(&mut warm, Want::All))
            });
            group.bench_function(BenchmarkId::new("cold", mode), |b| {
                b.iter_batched(
                    || workload.index(mode),
                    |mut index| workload.replay(&mut index, Want::All),
                    criterion::BatchSize::LargeInput,
                )
            });
        }
        group.finish();
    }
}

criterion_group!(benches, retrieval);
criterion_main!(benches);
