use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynprice_core::{
    decide, run, BaselineTariff, DecisionEvent, Exec, ForecasterSuite, Horizon, PolicyConfig,
    PolicyInput, PolicyKind, RunConfig, SeriesKind,
};

fn day_input() -> PolicyInput {
    let config = RunConfig::default();
    let scenario = config.scenario().unwrap();
    let event = DecisionEvent::for_day(1);
    let forecasts = ForecasterSuite::default()
        .forecast_set(&scenario, &event, config.seed)
        .unwrap();
    let tariff = BaselineTariff::default();
    PolicyInput {
        baseline_tariff: tariff.series(&forecasts.means(SeriesKind::Price)),
        calendar: scenario
            .calendar_window(event.delivery_start(), 24)
            .unwrap()
            .to_vec(),
        forecasts,
        price_history: Vec::new(),
        model: config.demand.build().unwrap(),
        tariff,
        cost: config.cost,
    }
}

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn optimizer_restarts(c: &mut Criterion) {
    let input = day_input();
    let mut group = c.benchmark_group("optimizer_16_restarts");
    for (name, exec) in MODES {
        let config = PolicyConfig {
            restarts: 16,
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| decide(&config, &input).unwrap())
        });
    }
    group.finish();
}

fn robust_sampling(c: &mut Criterion) {
    let input = day_input();
    let mut group = c.benchmark_group("robust_32_samples");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = PolicyConfig {
            kind: PolicyKind::Robust,
            mc_samples: 32,
            restarts: 2,
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| decide(&config, &input).unwrap())
        });
    }
    group.finish();
}

fn elasticity_sweep(c: &mut Criterion) {
    let configs: Vec<RunConfig> = [0.0, 0.1, 0.2, 0.3]
        .into_iter()
        .map(|scale| {
            let mut config = RunConfig {
                horizon: Horizon::days(2).unwrap(),
                ..Default::default()
            };
            config.demand.elasticity_scale = scale;
            config.policy.exec = Exec::Sequential;
            config
        })
        .collect();
    let scenario = configs[0].scenario().unwrap();
    let mut group = c.benchmark_group("sweep_4_runs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(configs.clone(), |config| {
                    run(&config, &scenario).unwrap().report
                })
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    optimizer_restarts,
    robust_sampling,
    elasticity_sweep
);
criterion_main!(benches);
