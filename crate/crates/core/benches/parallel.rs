use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mddpg::ddpg::{train, Algo, ExperimentConfig};
use mddpg::harness::{evaluate, run_compare, CompareSpec, Execution};
use mddpg::world::SceneConfig;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn quick_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.agent.warmup_steps = 100;
    cfg.agent.batch_size = 32;
    cfg
}

fn bench_evaluate(c: &mut Criterion) {
    let scene = SceneConfig::bundled("scene2").expect("bundled scene");
    let cfg = quick_config();
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for algo in [Algo::Mddpg, Algo::Dqn] {
        let agent = train(&scene, &cfg, 5, 1, algo).expect("training").agent;
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, algo), &exec, |b, &exec| {
                b.iter(|| evaluate(&agent, &scene, &cfg, 200, 7, exec).expect("evaluation"))
            });
        }
    }
    group.finish();
}

fn bench_compare(c: &mut Criterion) {
    let spec = CompareSpec {
        scenes: vec![SceneConfig::bundled("scene1").expect("bundled scene")],
        algos: Algo::ALL.to_vec(),
        seeds: vec![1, 2],
        episodes: 10,
        eval_episodes: 20,
        config: quick_config(),
    };
    let mut group = c.benchmark_group("compare");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| run_compare(&spec, exec)));
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_compare);
criterion_main!(benches);
