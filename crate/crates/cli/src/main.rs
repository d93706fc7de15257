//! `hfm`: simulate walls, compute average-method U-values, train and apply
//! heat-flux networks, and run the architecture × split grid.
//!
//! Exit codes: 0 success, 1 data or usage error, 2 training divergence,
//! 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfm_core::architectures::{predict, predicted_u_from, train, Architecture, TrainingRun};
use hfm_core::experiment::{run_grid_detailed, write_outputs, write_plot_data, ExperimentConfig};
use hfm_core::iso9869::{average_u_value, metrics, stability_check};
use hfm_core::series::parse_csv;
use hfm_core::synth::{presets, simulate, BoundaryScenario, WallSpec};
use hfm_core::{Error, MeasurementSeries, SplitSpec};

#[derive(Parser)]
#[command(name = "hfm", version, about = "Heat flux method U-value analysis")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic measurement series from an RC wall model.
    Simulate {
        /// Wall TOML file, or a bundled preset: single_layer, reference_wall.
        #[arg(long)]
        wall: String,
        /// Scenario TOML file, or a bundled preset: steady, sinusoidal, step_change.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Average-method U-value and stability verdict of a measurement CSV.
    Uvalue {
        csv: PathBuf,
        #[arg(long, default_value_t = 24.0)]
        window_hours: f64,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Train one network and save a checkpoint.
    Train {
        csv: PathBuf,
        /// mlp3, lstm100, gru100, lstmgru100 (other sizes accepted, e.g. lstm16).
        #[arg(long)]
        arch: Architecture,
        /// Train/validation split: 1/4, 1/2 or 2/3.
        #[arg(long)]
        split: SplitSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Predict heat flux with a checkpoint and write plot data.
    Predict {
        checkpoint: PathBuf,
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train every architecture × split × seed and write the report directory.
    Grid {
        csv: PathBuf,
        /// Comma-separated global seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "mlp3,lstm100,gru100,lstmgru100")]
        archs: Vec<Architecture>,
        #[arg(long, value_delimiter = ',', default_value = "1/4,1/2,2/3")]
        splits: Vec<SplitSpec>,
        /// Concurrent cells; overrides the config file.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment config TOML (training, extrapolation, workers).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> hfm_core::Result<ExperimentConfig> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DivergedLoss { .. } | Error::NonFinitePrediction { .. } => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn run(command: Command) -> hfm_core::Result<()> {
    match command {
        Command::Simulate {
            wall,
            scenario,
            seed,
            output,
        } => {
            let wall = load_wall(&wall)?;
            let scenario = load_scenario(&scenario)?;
            let series = simulate(&wall, &scenario, seed)?;
            series.save(&output)?;
            println!(
                "wrote {} samples to {} (true U {:.4} W/(m2 K))",
                series.len(),
                output.display(),
                hfm_core::synth::true_u(&wall)
            );
        }
        Command::Uvalue {
            csv,
            window_hours,
            tol,
        } => {
            let series = parse_csv(&csv)?;
            let est = average_u_value(&series)?;
            println!("samples: {}", est.n_samples);
            println!("span: {:.2} h", series.span_hours());
            println!("U: {:.4} W/(m2 K)", est.u);
            if est.reversed_flux {
                println!("warning: net heat flow opposes the mean temperature difference");
            }
            let window = chrono_window(window_hours)?;
            match stability_check(&series, window, tol) {
                Ok(r) => println!(
                    "stability: {} (span {:.1} h {}, change without last {:.0} h window {:.2}%, tolerance {:.2}%)",
                    if r.stable { "stable" } else { "not stable" },
                    r.span_hours,
                    if r.span_ok { "ok" } else { "below 72 h" },
                    r.window_hours,
                    100.0 * r.relative_change,
                    100.0 * r.tolerance
                ),
                Err(e) => println!("stability: not assessed ({e})"),
            }
        }
        Command::Train {
            csv,
            arch,
            split,
            seed,
            output,
            config,
        } => {
            let series = parse_csv(&csv)?;
            let cfg = config.load()?;
            let spec = arch.network(cfg.training.cell_activation);
            let run = train(&spec, &series, split, seed, &cfg.training)?;
            run.save(&output)?;
            println!(
                "{arch} split {split} seed {seed}: {} epochs, best training loss {:.4e} at epoch {}",
                run.epoch_losses.len(),
                run.best_loss(),
                run.best_epoch
            );
            report_predictions(&run, &series)?;
            println!("checkpoint: {}", output.display());
        }
        Command::Predict {
            checkpoint,
            csv,
            output,
        } => {
            let run = TrainingRun::load(&checkpoint)?;
            let series = parse_csv(&csv)?;
            let predictions = predict(&run, &series)?;
            let files = write_plot_data(&predictions, &series, run.split, &output)?;
            report_predictions(&run, &series)?;
            println!("plot data: {}", files.series.display());
            println!("scatter: {}", files.scatter.display());
        }
        Command::Grid {
            csv,
            seeds,
            archs,
            splits,
            workers,
            output,
            config,
        } => {
            let series = parse_csv(&csv)?;
            let mut cfg = config.load()?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let out = run_grid_detailed(&series, &archs, &splits, &seeds, &cfg)?;
            write_outputs(&output, &series, &out)?;
            print!("{}", out.report.to_table());
            println!("report: {}", output.display());
        }
    }
    Ok(())
}

fn report_predictions(run: &TrainingRun, series: &MeasurementSeries) -> hfm_core::Result<()> {
    let predictions = predict(run, series)?;
    let boundary = run.split.check(series.len())?;
    let q = series.heat_flux();
    let m = metrics(&predictions[boundary..], &q[boundary..])?;
    let u = predicted_u_from(&predictions, series, run.split)?;
    let (_, validation) = hfm_core::series::split(series, run.split)?;
    let measured = average_u_value(&validation)?.u;
    println!(
        "validation: RMSE {:.3} MSE {:.3} MAE {:.3} W/m2; predicted U {:.4} (full series {:.4}), measured U {:.4}",
        m.rmse, m.mse, m.mae, u.validation.u, u.full.u, measured
    );
    Ok(())
}

fn chrono_window(hours: f64) -> hfm_core::Result<chrono::TimeDelta> {
    if !(hours > 0.0 && hours.is_finite()) {
        return Err(Error::Config(format!("window must be positive, got {hours} h")));
    }
    Ok(chrono::TimeDelta::milliseconds((hours * 3.6e6).round() as i64))
}

fn load_wall(arg: &str) -> hfm_core::Result<WallSpec> {
    match arg {
        "single_layer" if !Path::new(arg).exists() => Ok(presets::single_layer_wall()),
        "reference_wall" if !Path::new(arg).exists() => Ok(presets::reference_wall()),
        path => WallSpec::load(path),
    }
}

fn load_scenario(arg: &str) -> hfm_core::Result<BoundaryScenario> {
    match arg {
        "steady" if !Path::new(arg).exists() => Ok(presets::steady()),
        "sinusoidal" if !Path::new(arg).exists() => Ok(presets::sinusoidal()),
        "step_change" if !Path::new(arg).exists() => Ok(presets::step_change()),
        path => BoundaryScenario::load(path),
    }
}
