use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use cfxcs::coordinator::{Coordinator, CoordinatorParams, MetricsParams, TaskBinding};
use cfxcs::exec::Execution;
use cfxcs::features::FeatureParams;
use cfxcs::xcs::XcsParams;

fn warmed(execution: Execution) -> Coordinator {
    let tasks: Vec<TaskBinding> = ["hmux:9", "hmaj:9", "hcarry:12", "mux:11"]
        .iter()
        .map(|t| TaskBinding::problem(t.parse().unwrap()))
        .collect();
    let xcs = XcsParams {
        population_size: 800,
        ..XcsParams::default()
    };
    let coordinator = CoordinatorParams {
        execution,
        ..CoordinatorParams::default()
    };
    let mut c = Coordinator::new(
        &tasks,
        &xcs,
        &FeatureParams::default(),
        coordinator,
        MetricsParams::default(),
        7,
    )
    .unwrap();
    for _ in 0..3000 {
        c.step_all().unwrap();
    }
    c
}

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("200 lock-step iterations, 4 tasks");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let start = warmed(execution);
        group.bench_function(name, |b| {
            b.iter_batched(
                || start.clone(),
                |mut c| {
                    for _ in 0..200 {
                        c.step_all().unwrap();
                    }
                    c
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, steps);
criterion_main!(benches);
