use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use hpdro::config::{experiment_from, Experiment, Manifest};
use hpdro::evaluation::Parallelism;
use hpdro::milp::{export_mps, SolveStatus};
use hpdro::model::Variant;
use hpdro::pipeline::{self, files, ArtifactStore, Failure, PipelineError, RunOptions, Stage};
use hpdro::uncertainty::RadiusMode;

/// Day-ahead heat pump scheduling under forecast uncertainty.
#[derive(Debug, Parser)]
#[command(name = "hpdro", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit error models and write the forecast margins.
    Fit(Common),
    /// Build the MILP from the fitted margins.
    Build(Common),
    /// Solve the built MILP and write the schedule.
    Solve(Common),
    /// Replay the schedule once on the nominal forecast (plot data).
    Simulate(Common),
    /// Monte Carlo evaluation of the schedule and the thermostat baseline.
    Montecarlo(Common),
    /// Summarise the evaluation as text.
    Report(Common),
    /// Run every stage in order.
    Pipeline(Common),
    /// Solve and evaluate over a grid of risk levels.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Deterministic,
    GaDro,
    KdeaDro,
    Ro,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RadiusArg {
    Constant,
    SqrtT,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    beta_power: Option<f64>,
    #[arg(long)]
    beta_temp: Option<f64>,
    #[arg(long, value_enum)]
    radius_mode: Option<RadiusArg>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Solver wall-clock limit, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the manifest's `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the MILP in MPS format.
    #[arg(long)]
    export_mps: Option<PathBuf>,
    /// Run Monte Carlo trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Power risk levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.01, 0.001])]
    power_levels: Vec<f64>,
    /// Temperature risk levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.01, 0.001])]
    temp_levels: Vec<f64>,
}

impl Common {
    fn experiment(&self) -> Result<Experiment, PipelineError> {
        let config = |e| PipelineError::new(Stage::Config, Failure::Config, e);
        let text = std::fs::read_to_string(&self.manifest).map_err(|e| {
            PipelineError::new(
                Stage::Config,
                Failure::Config,
                format!("{}: {e}", self.manifest.display()),
            )
        })?;
        let mut m = Manifest::parse(&text, &self.manifest).map_err(config)?;
        if let Some(v) = self.variant {
            m.variant = match v {
                VariantArg::Deterministic => Variant::Deterministic,
                VariantArg::GaDro => Variant::GaDro,
                VariantArg::KdeaDro => Variant::KdeaDro,
                VariantArg::Ro => Variant::Ro,
            };
        }
        if let Some(b) = self.beta_power {
            m.risk.beta_power = b;
        }
        if let Some(b) = self.beta_temp {
            m.risk.beta_temp = b;
        }
        if let Some(r) = self.radius_mode {
            m.risk.radius_mode = match r {
                RadiusArg::Constant => RadiusMode::Constant,
                RadiusArg::SqrtT => RadiusMode::SqrtT,
            };
        }
        if let Some(g) = self.gap {
            m.solver.gap = g;
        }
        if let Some(t) = self.time_limit {
            m.solver.time_limit_s = Some(t);
        }
        if let Some(n) = self.trials {
            m.evaluation.trials = n;
        }
        if let Some(s) = self.seed {
            m.evaluation.seed = s;
        }
        if let Some(out) = &self.out {
            m.out_dir = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
        }
        experiment_from(m, &self.manifest).map_err(config)
    }

    fn parallelism(&self) -> Parallelism {
        if self.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let common = match &cli.command {
        Command::Fit(c)
        | Command::Build(c)
        | Command::Solve(c)
        | Command::Simulate(c)
        | Command::Montecarlo(c)
        | Command::Report(c)
        | Command::Pipeline(c) => c,
        Command::Sweep(s) => &s.common,
    };
    let exp = common.experiment()?;
    let store = ArtifactStore::new(exp.out_dir());
    info!("manifest {} sha256 {}", common.manifest.display(), exp.manifest_hash);
    let par = common.parallelism();
    match &cli.command {
        Command::Fit(_) => {
            store.save_manifest(&exp)?;
            let fit = pipeline::fit(&exp)?;
            store.save_fit(&exp, &fit)?;
            println!("{}", store.path(files::FIT).display());
        }
        Command::Build(_) => {
            let fit = store.load_fit(&exp, Stage::Build)?;
            let inst = pipeline::build(&exp, &fit)?;
            store.save_instance(&inst)?;
            if let Some(path) = &common.export_mps {
                export_mps(&inst.instance, path).map_err(|e| {
                    PipelineError::new(Stage::Build, Failure::Other, format!("{}: {e}", path.display()))
                })?;
            }
            println!(
                "{} variables, {} rows",
                inst.instance.variables.len(),
                inst.instance.constraints.len()
            );
        }
        Command::Solve(_) => {
            let inst = store.load_instance(&exp)?;
            let sol = pipeline::solve(&exp, &inst)?;
            store.save_solution(&exp, &sol)?;
            print_solve(&sol);
        }
        Command::Simulate(_) => {
            let schedule = store.load_schedule(&exp)?;
            store.save_profile(&exp, &schedule, par)?;
            println!("{}", store.path(files::PROFILE).display());
        }
        Command::Montecarlo(_) => {
            let fit = store.load_fit(&exp, Stage::MonteCarlo)?;
            let schedule = store.load_schedule(&exp)?;
            let ev = pipeline::evaluate(&exp, &fit, &schedule, par)?;
            store.save_evaluation(&exp, &ev)?;
            println!(
                "mean p_max {:.4} kW, energy cost {:.4}, comfort {:.4}",
                ev.schedule.mean_p_max(),
                ev.schedule.energy_cost.mean,
                ev.schedule.comfort_rate.mean
            );
        }
        Command::Report(_) => {
            let sol = store.load_solution(&exp, Stage::Report)?;
            let ev = store.load_evaluation(&exp)?;
            let text = pipeline::report_text(&exp, &sol, &ev);
            store.save_report(&text)?;
            print!("{text}");
        }
        Command::Pipeline(_) => {
            let opts = RunOptions {
                export_mps: common.export_mps.clone(),
                parallelism: par,
            };
            let out = pipeline::run_pipeline(&exp, &opts)?;
            print!("{}", out.report);
        }
        Command::Sweep(s) => {
            store.save_manifest(&exp)?;
            let cells = pipeline::sweep(&exp, &s.power_levels, &s.temp_levels, par)?;
            let text = pipeline::sweep_csv(&exp, &cells);
            store.write(Stage::Report, files::SWEEP, text.as_bytes())?;
            print!("{text}");
        }
    }
    Ok(())
}

fn print_solve(sol: &pipeline::SolutionArtifact) {
    let s = &sol.solution;
    if s.status == SolveStatus::Timeout {
        warn!("solver stopped at a limit; the schedule is feasible but not proven within the gap");
    }
    println!(
        "status {} objective {} bound {:.6} gap {:.6} nodes {}",
        s.status.name(),
        s.objective_value.map_or("none".into(), |v| format!("{v:.6}")),
        s.best_bound,
        s.gap,
        s.nodes
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HPDRO_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
