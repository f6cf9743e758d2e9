use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ia_dof::harness::{run_sweep, SimConfig, SnrGrid};
use ia_dof::verification::verify_claims;
use ia_dof::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_claims");
    group.sample_size(10);
    for p in [2, 4] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, p), &p, |b, &p| {
                b.iter(|| verify_claims::<f64>(p, 8, 7, exec))
            });
        }
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SimConfig::new(3, 11);
        cfg.drops = 8;
        cfg.snr = SnrGrid::new(0.0, 100.0, 10.0).unwrap();
        cfg.execution = exec;
        group.bench_function(name, |b| b.iter(|| run_sweep(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, verify, sweep);
criterion_main!(benches);
