use std::path::{Path, PathBuf};

use hpdro::config::{
    experiment_from, load_experiment, write_errors_csv, write_forecast_csv, write_houses, write_price_csv, Experiment,
};
use hpdro::evaluation::{monte_carlo_evaluate, Controller, EvalConfig, ScenarioSet};
use hpdro::model::Variant;
use hpdro::pipeline::{self, files, ArtifactStore, Failure, RunOptions, Stage};
use hpdro::synthetic;
use hpdro::thermal::HouseSpec;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn desk_with(out: &Path, edit: impl FnOnce(&mut hpdro::config::Manifest)) -> Experiment {
    let path = data_dir().join("desk/manifest.toml");
    let mut exp = load_experiment(&path).unwrap();
    exp.manifest.out_dir = Some(out.to_path_buf());
    edit(&mut exp.manifest);
    experiment_from(exp.manifest, &path).unwrap()
}

#[test]
fn shipped_data_matches_the_generator() {
    let exp = load_experiment(&data_dir().join("desk/manifest.toml")).unwrap();
    let read = |p: &str| std::fs::read_to_string(data_dir().join(p)).unwrap();
    assert_eq!(read("houses.toml"), write_houses(&HouseSpec::reference_fleet()));
    let h = exp.manifest.horizon;
    let forecast = synthetic::forecast(&exp.zones, h, exp.manifest.slot_hours);
    assert_eq!(read("desk/forecast.csv"), write_forecast_csv(&forecast, &exp.zones));
    assert_eq!(read("desk/price.csv"), write_price_csv(&forecast.price));
    let mut histories = synthetic::temperature_histories(h, 2024);
    histories.extend(synthetic::power_histories(&exp.zones, h, 2024));
    assert_eq!(read("desk/errors.csv"), write_errors_csv(&histories));
    let mean = exp.forecast.price.iter().sum::<f64>() / h as f64;
    assert!((mean - 1.0).abs() < 1e-9, "{mean}");
}

#[test]
fn nominal_replay_reproduces_the_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let exp = desk_with(dir.path(), |m| m.variant = Variant::Deterministic);
    let fit = pipeline::fit(&exp).unwrap();
    let inst = pipeline::build(&exp, &fit).unwrap();
    let sol = pipeline::solve(&exp, &inst).unwrap();
    let schedule = sol.solution.schedule.clone().unwrap();
    let nominal = ScenarioSet::nominal(exp.zones.len(), exp.manifest.horizon);
    let report = monte_carlo_evaluate(
        Controller::Schedule(&schedule),
        &exp.houses,
        &exp.zones,
        &exp.forecast,
        &nominal,
        &EvalConfig::default(),
    )
    .unwrap();
    assert_eq!(report.trials.len(), 1);
    let trial = &report.trials[0];
    for (z, p) in sol.solution.p_max.iter().enumerate() {
        assert!((trial.p_max[z] - p).abs() < 1e-6, "zone {z}: {} vs {p}", trial.p_max[z]);
    }
    let energy = sol.predicted_energy_cost.unwrap();
    assert!((trial.energy_cost - energy).abs() < 1e-6 * energy.abs().max(1.0));
    assert!((trial.peak_cost - sol.predicted_peak_cost.unwrap()).abs() < 1e-5);
    assert_eq!(trial.comfort_rate, 1.0);
}

#[test]
fn stages_reject_artifacts_of_another_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let first = desk_with(dir.path(), |_| {});
    let store = ArtifactStore::new(first.out_dir());
    store.save_manifest(&first).unwrap();
    let fit = pipeline::fit(&first).unwrap();
    store.save_fit(&first, &fit).unwrap();
    assert!(store.load_fit(&first, Stage::Build).is_ok());

    let other = desk_with(dir.path(), |m| m.risk.beta_temp = 0.05);
    assert_ne!(first.manifest_hash, other.manifest_hash);
    let err = store.load_fit(&other, Stage::Build).unwrap_err();
    assert_eq!(err.failure, Failure::Config);
    assert_eq!(err.exit_code(), 2);
    assert!(pipeline::build(&other, &fit).is_err());
}

#[test]
fn pipeline_writes_tagged_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let exp = desk_with(dir.path(), |m| {
        m.variant = Variant::GaDro;
        m.evaluation.trials = 20;
    });
    let out = pipeline::run_pipeline(&exp, &RunOptions::default()).unwrap();
    let tag = format!(
        "# hpdro {} manifest-sha256 {}",
        hpdro::config::TOOL_VERSION,
        exp.manifest_hash
    );
    for name in [
        files::SCHEDULE,
        files::TRIALS,
        files::SUMMARY,
        files::BASELINE_TRIALS,
        files::PROFILE,
    ] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().next(), Some(tag.as_str()), "{name}");
    }
    let resolved = std::fs::read_to_string(dir.path().join(files::MANIFEST)).unwrap();
    assert_eq!(hpdro::config::sha256_hex(resolved.as_bytes()), exp.manifest_hash);
    let schedule_text = std::fs::read_to_string(dir.path().join(files::SCHEDULE)).unwrap();
    let parsed = pipeline::parse_schedule_csv(&exp, &schedule_text, Path::new(files::SCHEDULE)).unwrap();
    assert_eq!(Some(parsed), out.solution.solution.schedule);
    assert_eq!(out.evaluation.trials, 20);
    assert!(out.report.contains("ga-dro"));
}

#[test]
fn sweep_covers_the_grid_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let exp = desk_with(dir.path(), |m| m.evaluation.trials = 5);
    let cells = pipeline::sweep(&exp, &[0.1, 0.01], &[0.1], hpdro::evaluation::Parallelism::Sequential).unwrap();
    let order: Vec<(f64, f64)> = cells.iter().map(|c| (c.beta_power, c.beta_temp)).collect();
    assert_eq!(order, vec![(0.1, 0.1), (0.01, 0.1)]);
    assert!(cells[1].eta > cells[0].eta);
    let csv = pipeline::sweep_csv(&exp, &cells);
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn infeasible_instance_maps_to_its_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let exp = desk_with(dir.path(), |m| {
        m.variant = Variant::Deterministic;
        m.zone[0].trans_capacity_kw = 5.0;
    });
    let err = match pipeline::run_pipeline(&exp, &RunOptions::default()) {
        Ok(_) => panic!("a 5 kW transformer cannot carry the feeder"),
        Err(e) => e,
    };
    assert_eq!(err.failure, Failure::Infeasible);
    assert_eq!(err.exit_code(), 3);
}
