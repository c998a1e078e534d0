//! One SMC pass on the Czech data, sequential against parallel particle moves.
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jtsmc::exec::Execution;
use jtsmc::fixtures::czech_autoworkers;
use jtsmc::kernels::ExpanderConfig;
use jtsmc::rng::StreamKey;
use jtsmc::scores::ScoreModel;
use jtsmc::smc::{run_smc, TemporalModel};

fn smc_pass(c: &mut Criterion) {
    let score = ScoreModel::dirichlet(czech_autoworkers(), 1.0).unwrap();
    let model =
        TemporalModel::new(Arc::new(score), 6, ExpanderConfig::new(0.5, 0.5).unwrap()).unwrap();
    let mut group = c.benchmark_group("smc_czech");
    for n in [100, 1000] {
        for (name, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            let mut seed = 0;
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| {
                    seed += 1;
                    black_box(run_smc(&model, n, StreamKey::new(seed), None, exec).unwrap())
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, smc_pass);
criterion_main!(benches);
