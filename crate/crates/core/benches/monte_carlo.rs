//! Monte Carlo replay of the hysteresis baseline on the desk data, one
//! thread against the rayon pool.

use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hpdro::config::load_experiment;
use hpdro::evaluation::{monte_carlo_evaluate, Controller, EvalConfig, Parallelism, ScenarioSet};
use hpdro::pipeline;

fn replay(c: &mut Criterion) {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/desk/manifest.toml");
    let exp = load_experiment(&manifest).expect("desk manifest loads");
    let fit = pipeline::fit(&exp).expect("desk fit");
    let scenarios = ScenarioSet::generate(32, exp.zones.len(), &fit.temp_models, 7);
    let mut group = c.benchmark_group("monte_carlo_32_trials");
    group.sample_size(10);
    for (name, parallelism) in [
        ("sequential", Parallelism::Sequential),
        ("parallel", Parallelism::Parallel),
    ] {
        let cfg = EvalConfig {
            parallelism,
            ..EvalConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| {
                monte_carlo_evaluate(
                    Controller::Hysteresis,
                    &exp.houses,
                    &exp.zones,
                    &exp.forecast,
                    &scenarios,
                    cfg,
                )
                .expect("replay")
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replay);
criterion_main!(benches);
