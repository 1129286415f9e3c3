//! Stage orchestration: fit, build, solve, evaluate, report.
//!
//! Every stage can run on its own from the artifacts of the previous one.
//! JSON artifacts carry a [`Provenance`] record and CSV artifacts a leading
//! `#` comment line; both name the tool version and the hash of the
//! resolved manifest, and a stage refuses inputs written under another
//! manifest.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{write_atomic, ConfigError, Experiment, TOOL_VERSION};
use crate::evaluation::{
    monte_carlo_evaluate, slot_profile, write_profile_csv, Controller, EvalConfig, EvaluationReport, Parallelism,
    ScenarioSet,
};
use crate::milp::{export_mps, solve_milp, ScheduleSolution, SolveStatus};
use crate::model::{
    build_instance, gaussian_margins, interval_from_samples, interval_margins, kde_margins, BuildOptions, Margins,
    MilpInstance, ModelError, RadiusPlan, Schedule, Variant,
};
use crate::uncertainty::{fit_gaussian, fit_kde, radius_schedule, ErrorHistory, GaussianModel, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Fit,
    Build,
    Solve,
    Simulate,
    MonteCarlo,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Config => "config",
            Self::Fit => "fit",
            Self::Build => "build",
            Self::Solve => "solve",
            Self::Simulate => "simulate",
            Self::MonteCarlo => "montecarlo",
            Self::Report => "report",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Config,
    Infeasible,
    NoIncumbent,
    Other,
}

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub failure: Failure,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, failure: Failure, message: impl fmt::Display) -> Self {
        Self {
            stage,
            failure,
            message: message.to_string(),
        }
    }

    fn other(stage: Stage, message: impl fmt::Display) -> Self {
        Self::new(stage, Failure::Other, message)
    }

    fn config(stage: Stage, e: ConfigError) -> Self {
        let failure = match e {
            ConfigError::Io { .. } => Failure::Other,
            _ => Failure::Config,
        };
        Self::new(stage, failure, e)
    }

    /// Process exit status: 2 config, 3 infeasible, 4 timeout without an
    /// incumbent, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self.failure {
            Failure::Config => 2,
            Failure::Infeasible => 3,
            Failure::NoIncumbent => 4,
            Failure::Other => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub manifest_sha256: String,
}

impl Provenance {
    pub fn of(exp: &Experiment) -> Self {
        Self {
            tool: "hpdro".into(),
            version: TOOL_VERSION.into(),
            manifest_sha256: exp.manifest_hash.clone(),
        }
    }
}

/// One fitted stream and slot, with its margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub stream: String,
    pub slot: usize,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// KDE bandwidth, zero for the other variants.
    pub bandwidth: f64,
    pub eta: f64,
    pub margin_upper: f64,
    /// Only set for the temperature stream.
    pub margin_lower: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub provenance: Provenance,
    pub variant: Variant,
    pub margins: Margins,
    pub radii: RadiusPlan,
    /// Per-slot normals of the temperature error, used to draw scenarios.
    pub temp_models: Vec<GaussianModel>,
    pub rows: Vec<FitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceArtifact {
    pub provenance: Provenance,
    pub instance: MilpInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionArtifact {
    pub provenance: Provenance,
    pub variant: Variant,
    pub solution: ScheduleSolution,
    /// `sum_z psi_z p_max_z` at the incumbent, $.
    pub predicted_peak_cost: Option<f64>,
    /// Objective minus the peak part, $.
    pub predicted_energy_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationArtifact {
    pub provenance: Provenance,
    pub trials: usize,
    pub seed: u64,
    pub schedule: EvaluationReport,
    pub baseline: EvaluationReport,
}

/// Histories of one stream in slot order, exactly one per slot.
fn stream_slots<'a>(
    histories: &'a [ErrorHistory],
    stream: &StreamId,
    horizon: usize,
) -> std::result::Result<Vec<&'a ErrorHistory>, String> {
    let mut slots: Vec<Option<&ErrorHistory>> = vec![None; horizon];
    for h in histories.iter().filter(|h| &h.stream == stream) {
        if h.slot >= horizon {
            return Err(format!(
                "stream {} has slot {} beyond horizon {horizon}",
                stream.label(),
                h.slot
            ));
        }
        slots[h.slot] = Some(h);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(t, h)| h.ok_or_else(|| format!("stream {} has no samples for slot {t}", stream.label())))
        .collect()
}

/// Power histories of a zone: its own `power:<zone>` stream if present,
/// else the shared `power` stream.
fn power_stream(histories: &[ErrorHistory], zone: &str) -> StreamId {
    let own = StreamId::Power(zone.to_string());
    if histories.iter().any(|h| h.stream == own) {
        own
    } else {
        StreamId::Power(String::new())
    }
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fits the uncertainty models of the manifest's variant and derives the
/// forecast margins.
pub fn fit(exp: &Experiment) -> Result<FitArtifact> {
    let m = &exp.manifest;
    let h = m.horizon;
    let err = |e: String| PipelineError::new(Stage::Fit, Failure::Config, e);
    let temp_hist = stream_slots(&exp.histories, &StreamId::Temperature, h).map_err(err)?;
    let power_ids: Vec<StreamId> = exp
        .zones
        .iter()
        .map(|z| power_stream(&exp.histories, &z.name))
        .collect();
    let power_hist = power_ids
        .iter()
        .map(|id| stream_slots(&exp.histories, id, h))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(err)?;

    let fit_err = |e: &dyn fmt::Display| PipelineError::new(Stage::Fit, Failure::Config, e);
    let temp_models = temp_hist
        .iter()
        .map(|hist| fit_gaussian(hist))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| fit_err(&e))?;
    let radii = RadiusPlan {
        power: radius_schedule(m.risk.beta_power, h, m.slot_hours, m.risk.radius_mode).map_err(|e| fit_err(&e))?,
        temp: radius_schedule(m.risk.beta_temp, h, m.slot_hours, m.risk.radius_mode).map_err(|e| fit_err(&e))?,
    };
    let same_lower = m.risk.same_lower;

    let margins = match m.variant {
        Variant::Deterministic => Margins::zero(exp.zones.len(), h),
        Variant::GaDro => {
            let power = power_hist
                .iter()
                .map(|zone| {
                    zone.iter()
                        .map(|hist| fit_gaussian(hist))
                        .collect::<std::result::Result<Vec<_>, _>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fit_err(&e))?;
            gaussian_margins(&power, &temp_models, &radii, same_lower).map_err(|e| fit_err(&e))?
        }
        Variant::KdeaDro => {
            let bw = &m.bandwidth;
            let power = power_hist
                .iter()
                .map(|zone| {
                    zone.iter()
                        .map(|hist| fit_kde(hist, bw.power_kw))
                        .collect::<std::result::Result<Vec<_>, _>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fit_err(&e))?;
            let temp = temp_hist
                .iter()
                .map(|hist| fit_kde(hist, bw.temperature_degc))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fit_err(&e))?;
            kde_margins(&power, &temp, &radii, same_lower).map_err(|e| fit_err(&e))?
        }
        Variant::Ro => {
            let interval = |hist: &&ErrorHistory| interval_from_samples(&hist.samples, m.interval);
            let power = power_hist
                .iter()
                .map(|zone| zone.iter().map(interval).collect::<std::result::Result<Vec<_>, _>>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fit_err(&e))?;
            let temp = temp_hist
                .iter()
                .map(interval)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fit_err(&e))?;
            interval_margins(&power, &temp).map_err(|e| fit_err(&e))?
        }
    };

    let bandwidth = |power: bool| match m.variant {
        Variant::KdeaDro if power => m.bandwidth.power_kw,
        Variant::KdeaDro => m.bandwidth.temperature_degc,
        _ => 0.0,
    };
    let mut rows = Vec::new();
    for (t, hist) in temp_hist.iter().enumerate() {
        let (mean, std_dev) = mean_std(&hist.samples);
        rows.push(FitRow {
            stream: StreamId::Temperature.label(),
            slot: t,
            samples: hist.samples.len(),
            mean,
            std_dev,
            bandwidth: bandwidth(false),
            eta: radii.temp[t].eta(),
            margin_upper: margins.temp_upper[t],
            margin_lower: Some(margins.temp_lower[t]),
        });
    }
    for (z, zone) in power_hist.iter().enumerate() {
        for (t, hist) in zone.iter().enumerate() {
            let (mean, std_dev) = mean_std(&hist.samples);
            rows.push(FitRow {
                stream: StreamId::Power(exp.zones[z].name.clone()).label(),
                slot: t,
                samples: hist.samples.len(),
                mean,
                std_dev,
                bandwidth: bandwidth(true),
                eta: radii.power[t].eta(),
                margin_upper: margins.power[z][t],
                margin_lower: None,
            });
        }
    }
    Ok(FitArtifact {
        provenance: Provenance::of(exp),
        variant: m.variant,
        margins,
        radii,
        temp_models,
        rows,
    })
}

pub fn build(exp: &Experiment, fit: &FitArtifact) -> Result<InstanceArtifact> {
    check_provenance(Stage::Build, exp, &fit.provenance)?;
    let opts = BuildOptions {
        cyclic_switching: exp.manifest.solver.cyclic_switching,
    };
    let instance =
        build_instance(fit.variant, &exp.houses, &exp.zones, &exp.forecast, &fit.margins, opts).map_err(|e| {
            let failure = match e {
                ModelError::Infeasible { .. } => Failure::Infeasible,
                _ => Failure::Config,
            };
            PipelineError::new(Stage::Build, failure, e)
        })?;
    Ok(InstanceArtifact {
        provenance: Provenance::of(exp),
        instance,
    })
}

/// Solves the instance. Infeasibility and a timeout without any
/// incumbent are errors; a timeout with an incumbent is not.
pub fn solve(exp: &Experiment, inst: &InstanceArtifact) -> Result<SolutionArtifact> {
    check_provenance(Stage::Solve, exp, &inst.provenance)?;
    let solution =
        solve_milp(&inst.instance, &exp.manifest.solver.bnb()).map_err(|e| PipelineError::other(Stage::Solve, e))?;
    match solution.status {
        SolveStatus::Infeasible => {
            return Err(PipelineError::new(
                Stage::Solve,
                Failure::Infeasible,
                "model is infeasible",
            ));
        }
        SolveStatus::Timeout if !solution.has_incumbent() => {
            return Err(PipelineError::new(
                Stage::Solve,
                Failure::NoIncumbent,
                format!(
                    "limit reached after {} nodes without a feasible schedule",
                    solution.nodes
                ),
            ));
        }
        _ => {}
    }
    let peak = solution.has_incumbent().then(|| {
        exp.zones
            .iter()
            .zip(&solution.p_max)
            .map(|(z, p)| z.psi * p)
            .sum::<f64>()
    });
    let energy = solution.objective_value.zip(peak).map(|(obj, peak)| obj - peak);
    Ok(SolutionArtifact {
        provenance: Provenance::of(exp),
        variant: inst.instance.variant,
        solution,
        predicted_peak_cost: peak,
        predicted_energy_cost: energy,
    })
}

pub fn eval_config(exp: &Experiment, parallelism: Parallelism) -> EvalConfig {
    EvalConfig {
        fine_dt_s: exp.manifest.evaluation.fine_dt_s,
        parallelism,
        ..EvalConfig::default()
    }
}

/// Monte Carlo replay of the schedule and of the hysteresis baseline
/// over one shared scenario set.
pub fn evaluate(
    exp: &Experiment,
    fit: &FitArtifact,
    schedule: &Schedule,
    parallelism: Parallelism,
) -> Result<EvaluationArtifact> {
    check_provenance(Stage::MonteCarlo, exp, &fit.provenance)?;
    let ev = &exp.manifest.evaluation;
    let scenarios = ScenarioSet::generate(ev.trials, exp.zones.len(), &fit.temp_models, ev.seed);
    let cfg = eval_config(exp, parallelism);
    let err = |e: crate::evaluation::EvaluationError| PipelineError::other(Stage::MonteCarlo, e);
    let scheduled = monte_carlo_evaluate(
        Controller::Schedule(schedule),
        &exp.houses,
        &exp.zones,
        &exp.forecast,
        &scenarios,
        &cfg,
    )
    .map_err(err)?;
    let baseline = monte_carlo_evaluate(
        Controller::Hysteresis,
        &exp.houses,
        &exp.zones,
        &exp.forecast,
        &scenarios,
        &cfg,
    )
    .map_err(err)?;
    Ok(EvaluationArtifact {
        provenance: Provenance::of(exp),
        trials: ev.trials,
        seed: ev.seed,
        schedule: scheduled,
        baseline,
    })
}

/// Plain-text summary of the schedule against the baseline.
pub fn report_text(exp: &Experiment, sol: &SolutionArtifact, ev: &EvaluationArtifact) -> String {
    let m = &exp.manifest;
    let mut s = String::new();
    let _ = writeln!(s, "hpdro {TOOL_VERSION}");
    let _ = writeln!(s, "manifest-sha256 {}", exp.manifest_hash);
    let _ = writeln!(s, "variant {}", sol.variant);
    let _ = writeln!(
        s,
        "houses {}  zones {}  horizon {} x {} h",
        exp.houses.len(),
        exp.zones.len(),
        m.horizon,
        m.slot_hours
    );
    let _ = writeln!(
        s,
        "beta_power {}  beta_temp {}  radius_mode {:?}",
        m.risk.beta_power, m.risk.beta_temp, m.risk.radius_mode
    );
    let so = &sol.solution;
    let _ = writeln!(s);
    let _ = writeln!(s, "[solve]");
    let _ = writeln!(s, "status {}", so.status.name());
    if let Some(obj) = so.objective_value {
        let _ = writeln!(s, "objective {obj:.6}");
    }
    let _ = writeln!(s, "bound {:.6}", so.best_bound);
    let _ = writeln!(s, "gap {:.6}", so.gap);
    let _ = writeln!(s, "nodes {}", so.nodes);
    if let (Some(p), Some(e)) = (sol.predicted_peak_cost, sol.predicted_energy_cost) {
        let _ = writeln!(s, "predicted_peak_cost {p:.6}");
        let _ = writeln!(s, "predicted_energy_cost {e:.6}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[montecarlo]");
    let _ = writeln!(s, "trials {}  seed {}", ev.trials, ev.seed);
    let _ = writeln!(
        s,
        "{:<22}{:>12}{:>12}{:>12}{:>12}{:>12}",
        "metric", "controller", "best", "worst", "mean", "std_err"
    );
    let mut line = |name: &str, who: &str, sm: &crate::evaluation::Summary| {
        let _ = writeln!(
            s,
            "{name:<22}{who:>12}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
            sm.best, sm.worst, sm.mean, sm.std_err
        );
    };
    for (who, r) in [("schedule", &ev.schedule), ("baseline", &ev.baseline)] {
        for (z, sm) in r.zones.iter().zip(&r.p_max) {
            line(&format!("p_max_kw_{z}"), who, sm);
        }
        line("peak_cost", who, &r.peak_cost);
        line("energy_cost", who, &r.energy_cost);
        line("comfort_rate", who, &r.comfort_rate);
    }
    let base_p = ev.baseline.mean_p_max();
    let base_e = ev.baseline.energy_cost.mean;
    if base_p > 0.0 && base_e > 0.0 {
        let _ = writeln!(s);
        let _ = writeln!(s, "[reduction_vs_baseline]");
        let _ = writeln!(s, "mean_p_max {:.4}", 1.0 - ev.schedule.mean_p_max() / base_p);
        let _ = writeln!(s, "mean_energy_cost {:.4}", 1.0 - ev.schedule.energy_cost.mean / base_e);
    }
    s
}

/// `house,x_0,...,x_{H-1}` with one row per house.
pub fn schedule_csv(exp: &Experiment, schedule: &Schedule) -> String {
    let mut out = exp.provenance();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["house".to_string()];
    head.extend((0..schedule.horizon()).map(|t| format!("x_{t}")));
    w.write_record(&head).expect("in-memory write");
    for (house, row) in exp.houses.iter().zip(&schedule.x) {
        let mut rec = vec![house.id.to_string()];
        rec.extend(row.iter().map(|&on| if on { "1" } else { "0" }.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
    out
}

pub fn parse_schedule_csv(exp: &Experiment, text: &str, path: &Path) -> Result<Schedule> {
    check_csv_provenance(Stage::MonteCarlo, exp, text, path)?;
    let bad =
        |msg: String| PipelineError::new(Stage::MonteCarlo, Failure::Config, format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut x = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let expect = exp.houses.get(n).map(|h| h.id.to_string());
        if expect.as_deref() != rec.get(0) {
            return Err(bad(format!(
                "row {} is house {:?}, expected {:?}",
                n + 1,
                rec.get(0),
                expect
            )));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| match v {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(format!("row {}: {other:?} is not 0 or 1", n + 1))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if row.len() != exp.manifest.horizon {
            return Err(bad(format!(
                "row {} has {} slots, expected {}",
                n + 1,
                row.len(),
                exp.manifest.horizon
            )));
        }
        x.push(row);
    }
    if x.len() != exp.houses.len() {
        return Err(bad(format!("{} houses, expected {}", x.len(), exp.houses.len())));
    }
    Ok(Schedule { x })
}

pub fn fit_csv(exp: &Experiment, fit: &FitArtifact) -> String {
    let mut out = exp.provenance();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "stream",
        "slot",
        "samples",
        "mean",
        "std_dev",
        "bandwidth",
        "eta",
        "margin_upper",
        "margin_lower",
    ])
    .expect("in-memory write");
    for r in &fit.rows {
        w.write_record([
            r.stream.clone(),
            r.slot.to_string(),
            r.samples.to_string(),
            format!("{}", r.mean),
            format!("{}", r.std_dev),
            format!("{}", r.bandwidth),
            format!("{}", r.eta),
            format!("{}", r.margin_upper),
            r.margin_lower.map(|v| format!("{v}")).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
    out
}

fn csv_with_provenance(
    exp: &Experiment,
    stage: Stage,
    write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), csv::Error>,
) -> Result<Vec<u8>> {
    let mut buf = exp.provenance().into_bytes();
    write(&mut buf).map_err(|e| PipelineError::other(stage, e))?;
    Ok(buf)
}

fn check_provenance(stage: Stage, exp: &Experiment, p: &Provenance) -> Result<()> {
    if p.manifest_sha256 != exp.manifest_hash {
        return Err(PipelineError::new(
            stage,
            Failure::Config,
            format!(
                "input was produced under manifest {}, current manifest is {}",
                p.manifest_sha256, exp.manifest_hash
            ),
        ));
    }
    Ok(())
}

fn check_csv_provenance(stage: Stage, exp: &Experiment, text: &str, path: &Path) -> Result<()> {
    let first = text.lines().next().unwrap_or("");
    if first.trim_end() != exp.provenance().trim_end() {
        return Err(PipelineError::new(
            stage,
            Failure::Config,
            format!(
                "{}: provenance line {first:?} does not match the current manifest",
                path.display()
            ),
        ));
    }
    Ok(())
}

/// File names inside the output directory.
pub mod files {
    pub const MANIFEST: &str = "manifest.resolved.toml";
    pub const FIT: &str = "margins.json";
    pub const FIT_CSV: &str = "fit.csv";
    pub const INSTANCE: &str = "instance.json";
    pub const SOLUTION: &str = "solution.json";
    pub const SCHEDULE: &str = "schedule.csv";
    pub const PROFILE: &str = "profile.csv";
    pub const EVALUATION: &str = "evaluation.json";
    pub const TRIALS: &str = "report_trials.csv";
    pub const SUMMARY: &str = "report_summary.csv";
    pub const BASELINE_TRIALS: &str = "baseline_trials.csv";
    pub const BASELINE_SUMMARY: &str = "baseline_summary.csv";
    pub const REPORT: &str = "report.txt";
    pub const SWEEP: &str = "sweep.csv";
}

/// Reads and writes stage artifacts under one output directory.
#[derive(Debug, Clone)]
pub struct ArtifactStore {
    pub dir: PathBuf,
}

impl ArtifactStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, stage: Stage, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(name), bytes).map_err(|e| PipelineError::config(stage, e))
    }

    pub fn write_json<T: Serialize>(&self, stage: Stage, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::other(stage, e))?;
        text.push('\n');
        self.write(stage, name, text.as_bytes())
    }

    pub fn read_text(&self, stage: Stage, name: &str) -> Result<String> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| {
            PipelineError::new(
                stage,
                Failure::Config,
                format!("{}: {e}; run the previous stage first", path.display()),
            )
        })
    }

    pub fn read_json<T: DeserializeOwned>(&self, stage: Stage, name: &str) -> Result<T> {
        let text = self.read_text(stage, name)?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::new(stage, Failure::Config, format!("{}: {e}", self.path(name).display())))
    }

    pub fn save_manifest(&self, exp: &Experiment) -> Result<()> {
        self.write(Stage::Config, files::MANIFEST, exp.manifest.to_toml().as_bytes())
    }

    pub fn save_fit(&self, exp: &Experiment, fit: &FitArtifact) -> Result<()> {
        self.write_json(Stage::Fit, files::FIT, fit)?;
        self.write(Stage::Fit, files::FIT_CSV, fit_csv(exp, fit).as_bytes())
    }

    pub fn load_fit(&self, exp: &Experiment, stage: Stage) -> Result<FitArtifact> {
        let fit: FitArtifact = self.read_json(stage, files::FIT)?;
        check_provenance(stage, exp, &fit.provenance)?;
        Ok(fit)
    }

    pub fn save_instance(&self, inst: &InstanceArtifact) -> Result<()> {
        self.write_json(Stage::Build, files::INSTANCE, inst)
    }

    pub fn load_instance(&self, exp: &Experiment) -> Result<InstanceArtifact> {
        let inst: InstanceArtifact = self.read_json(Stage::Solve, files::INSTANCE)?;
        check_provenance(Stage::Solve, exp, &inst.provenance)?;
        Ok(inst)
    }

    pub fn save_solution(&self, exp: &Experiment, sol: &SolutionArtifact) -> Result<()> {
        self.write_json(Stage::Solve, files::SOLUTION, sol)?;
        if let Some(schedule) = &sol.solution.schedule {
            self.write(Stage::Solve, files::SCHEDULE, schedule_csv(exp, schedule).as_bytes())?;
        }
        Ok(())
    }

    pub fn load_solution(&self, exp: &Experiment, stage: Stage) -> Result<SolutionArtifact> {
        let sol: SolutionArtifact = self.read_json(stage, files::SOLUTION)?;
        check_provenance(stage, exp, &sol.provenance)?;
        Ok(sol)
    }

    pub fn load_schedule(&self, exp: &Experiment) -> Result<Schedule> {
        let text = self.read_text(Stage::MonteCarlo, files::SCHEDULE)?;
        parse_schedule_csv(exp, &text, &self.path(files::SCHEDULE))
    }

    pub fn save_profile(&self, exp: &Experiment, schedule: &Schedule, parallelism: Parallelism) -> Result<()> {
        let rows = slot_profile(
            schedule,
            &exp.houses,
            &exp.zones,
            &exp.forecast,
            &eval_config(exp, parallelism),
        )
        .map_err(|e| PipelineError::other(Stage::Simulate, e))?;
        let bytes = csv_with_provenance(exp, Stage::Simulate, |buf| {
            write_profile_csv(&rows, &exp.zones, &exp.houses, buf)
        })?;
        self.write(Stage::Simulate, files::PROFILE, &bytes)
    }

    pub fn save_evaluation(&self, exp: &Experiment, ev: &EvaluationArtifact) -> Result<()> {
        let st = Stage::MonteCarlo;
        self.write_json(st, files::EVALUATION, ev)?;
        for (name, report) in [(files::TRIALS, &ev.schedule), (files::BASELINE_TRIALS, &ev.baseline)] {
            let bytes = csv_with_provenance(exp, st, |buf| report.write_trials_csv(buf))?;
            self.write(st, name, &bytes)?;
        }
        for (name, report) in [(files::SUMMARY, &ev.schedule), (files::BASELINE_SUMMARY, &ev.baseline)] {
            let bytes = csv_with_provenance(exp, st, |buf| report.write_summary_csv(buf))?;
            self.write(st, name, &bytes)?;
        }
        Ok(())
    }

    pub fn load_evaluation(&self, exp: &Experiment) -> Result<EvaluationArtifact> {
        let ev: EvaluationArtifact = self.read_json(Stage::Report, files::EVALUATION)?;
        check_provenance(Stage::Report, exp, &ev.provenance)?;
        Ok(ev)
    }

    pub fn save_report(&self, text: &str) -> Result<()> {
        self.write(Stage::Report, files::REPORT, text.as_bytes())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub export_mps: Option<PathBuf>,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub fit: FitArtifact,
    pub solution: SolutionArtifact,
    pub evaluation: EvaluationArtifact,
    pub report: String,
}

/// All stages in order, writing every artifact to the output directory.
pub fn run_pipeline(exp: &Experiment, opts: &RunOptions) -> Result<PipelineOutcome> {
    let store = ArtifactStore::new(exp.out_dir());
    store.save_manifest(exp)?;
    let fit_art = fit(exp)?;
    store.save_fit(exp, &fit_art)?;
    let inst = build(exp, &fit_art)?;
    store.save_instance(&inst)?;
    if let Some(path) = &opts.export_mps {
        export_mps(&inst.instance, path).map_err(|e| PipelineError::other(Stage::Build, e))?;
    }
    let sol = solve(exp, &inst)?;
    store.save_solution(exp, &sol)?;
    let schedule = sol
        .solution
        .schedule
        .clone()
        .ok_or_else(|| PipelineError::new(Stage::Solve, Failure::NoIncumbent, "solver returned no schedule"))?;
    store.save_profile(exp, &schedule, opts.parallelism)?;
    let ev = evaluate(exp, &fit_art, &schedule, opts.parallelism)?;
    store.save_evaluation(exp, &ev)?;
    let report = report_text(exp, &sol, &ev);
    store.save_report(&report)?;
    Ok(PipelineOutcome {
        fit: fit_art,
        solution: sol,
        evaluation: ev,
        report,
    })
}

/// One cell of a risk-level grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta_power: f64,
    pub beta_temp: f64,
    pub eta: f64,
    pub chi: f64,
    pub status: SolveStatus,
    pub mean_p_max: f64,
    pub std_err_p_max: f64,
    pub mean_energy_cost: f64,
    pub std_err_energy_cost: f64,
    pub mean_comfort_rate: f64,
    pub std_err_comfort_rate: f64,
}

/// Re-solves and re-evaluates the manifest's variant for every pair of
/// risk levels, power levels outermost.
pub fn sweep(
    exp: &Experiment,
    beta_power: &[f64],
    beta_temp: &[f64],
    parallelism: Parallelism,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &bp in beta_power {
        for &bt in beta_temp {
            let mut e = exp.clone();
            e.manifest.risk.beta_power = bp;
            e.manifest.risk.beta_temp = bt;
            e.manifest
                .check(&e.manifest_path)
                .map_err(|err| PipelineError::config(Stage::Config, err))?;
            let f = fit(&e)?;
            let sol = solve(&e, &build(&e, &f)?)?;
            let schedule = sol.solution.schedule.as_ref().expect("solve returns a schedule");
            let ev = evaluate(&e, &f, schedule, parallelism)?;
            let r = &ev.schedule;
            let p_err = r.p_max.iter().map(|s| s.std_err.powi(2)).sum::<f64>().sqrt();
            cells.push(SweepCell {
                beta_power: bp,
                beta_temp: bt,
                eta: f.radii.power[0].eta(),
                chi: f.radii.temp[0].eta(),
                status: sol.solution.status,
                mean_p_max: r.mean_p_max(),
                std_err_p_max: p_err,
                mean_energy_cost: r.energy_cost.mean,
                std_err_energy_cost: r.energy_cost.std_err,
                mean_comfort_rate: r.comfort_rate.mean,
                std_err_comfort_rate: r.comfort_rate.std_err,
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(exp: &Experiment, cells: &[SweepCell]) -> String {
    let mut out = exp.provenance();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "beta_power",
        "beta_temp",
        "eta",
        "chi",
        "status",
        "mean_p_max_kw",
        "std_err_p_max_kw",
        "mean_energy_cost",
        "std_err_energy_cost",
        "mean_comfort_rate",
        "std_err_comfort_rate",
    ])
    .expect("in-memory write");
    for c in cells {
        w.write_record([
            format!("{}", c.beta_power),
            format!("{}", c.beta_temp),
            format!("{}", c.eta),
            format!("{}", c.chi),
            c.status.name().to_string(),
            format!("{}", c.mean_p_max),
            format!("{}", c.std_err_p_max),
            format!("{}", c.mean_energy_cost),
            format!("{}", c.std_err_energy_cost),
            format!("{}", c.mean_comfort_rate),
            format!("{}", c.std_err_comfort_rate),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
    out
}
