//! The architecture × split grid: training every cell, validation metrics,
//! predicted against measured U, extrapolation flags and report output.

mod config;
mod export;
mod extrapolation;
mod report;
mod seed;

use std::path::Path;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExtrapolationConfig};
pub use export::{export_plot_data, scatter_path, write_plot_data, PlotFiles, PLOT_HEADER, SCATTER_HEADER};
pub use extrapolation::{detect_extrapolation, ExtrapolationReport, FlagInterval, FlaggedStep, InputChannel};
pub use report::{
    CellOutcome, CellSummary, ReportRow, RowSummary, SeedResult, SplitMeasurement, Spread, UValueReport,
    REPORT_FORMAT, REPORT_VERSION,
};
pub use seed::cell_seed;

use crate::architectures::{predict, predicted_u_from, train, Architecture, TrainingRun};
use crate::error::{Error, Result};
use crate::iso9869::{average_u_value, metrics, relative_difference};
use crate::series::{split, MeasurementSeries, SplitSpec};

/// A trained cell with the artefacts behind its report entry.
#[derive(Clone, Debug)]
pub struct TrainedCell {
    pub run: TrainingRun,
    /// Predicted flux over the whole series, W/m².
    pub predictions: Vec<f64>,
    pub summary: CellSummary,
    pub extrapolation: ExtrapolationReport,
}

#[derive(Debug)]
pub struct GridCell {
    pub architecture: Architecture,
    pub split: SplitSpec,
    pub seed: u64,
    pub cell_seed: u64,
    pub result: Result<TrainedCell>,
}

/// Cells and the report assembled from them.
#[derive(Debug)]
pub struct GridOutput {
    pub report: UValueReport,
    pub cells: Vec<GridCell>,
}

/// Runs the grid and returns the report only.
pub fn run_grid(
    series: &MeasurementSeries,
    architectures: &[Architecture],
    splits: &[SplitSpec],
    seeds: &[u64],
    config: &ExperimentConfig,
) -> Result<UValueReport> {
    Ok(run_grid_detailed(series, architectures, splits, seeds, config)?.report)
}

/// Trains every (architecture, split, seed) combination, up to
/// `config.workers` at a time. A failing cell is recorded in the report and
/// does not stop the grid. Every cell seed is derived with [`cell_seed`], so
/// results do not depend on execution order or worker count.
pub fn run_grid_detailed(
    series: &MeasurementSeries,
    architectures: &[Architecture],
    splits: &[SplitSpec],
    seeds: &[u64],
    config: &ExperimentConfig,
) -> Result<GridOutput> {
    if architectures.is_empty() || splits.is_empty() || seeds.is_empty() {
        return Err(Error::Config("the grid needs at least one architecture, split and seed".into()));
    }
    config.validate()?;

    let mut jobs = Vec::new();
    for &a in architectures {
        for &s in splits {
            for &g in seeds {
                jobs.push((a, s, g));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let cells: Vec<GridCell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(architecture, split, seed)| {
                let cs = cell_seed(seed, architecture, split);
                log::info!("training {architecture} {split} seed {seed}");
                let result = run_cell(series, architecture, split, cs, config);
                if let Err(e) = &result {
                    log::warn!("{architecture} {split} seed {seed} failed: {e}");
                }
                GridCell {
                    architecture,
                    split,
                    seed,
                    cell_seed: cs,
                    result,
                }
            })
            .collect()
    });

    let measured_u_full = average_u_value(series).ok().map(|e| e.u);
    let split_measurements: Vec<SplitMeasurement> = splits
        .iter()
        .map(|&s| SplitMeasurement {
            split: s,
            boundary: s.train_len(series.len()),
            measured_u_validation: measured_validation_u(series, s).ok(),
        })
        .collect();

    let mut rows = Vec::new();
    let mut it = cells.iter();
    for &a in architectures {
        for &s in splits {
            let seed_results = seeds
                .iter()
                .map(|_| {
                    let c = it.next().expect("one cell per job");
                    SeedResult {
                        seed: c.seed,
                        cell_seed: c.cell_seed,
                        outcome: match &c.result {
                            Ok(t) => CellOutcome::Ok(t.summary),
                            Err(e) => CellOutcome::Failed { error: e.to_string() },
                        },
                    }
                })
                .collect();
            let measured = split_measurements.iter().find(|m| m.split == s).and_then(|m| m.measured_u_validation);
            rows.push(ReportRow::new(a, s, seed_results, measured));
        }
    }
    let report = UValueReport::new(series.len(), seeds.to_vec(), measured_u_full, split_measurements, rows);
    Ok(GridOutput { report, cells })
}

fn measured_validation_u(series: &MeasurementSeries, s: SplitSpec) -> Result<f64> {
    let (_, validation) = split(series, s)?;
    Ok(average_u_value(&validation)?.u)
}

fn run_cell(
    series: &MeasurementSeries,
    architecture: Architecture,
    split_spec: SplitSpec,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<TrainedCell> {
    let spec = architecture.network(config.training.cell_activation);
    let run = train(&spec, series, split_spec, seed, &config.training)?;
    let predictions = predict(&run, series)?;
    if let Some(index) = predictions.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinitePrediction { index });
    }
    let boundary = split_spec.check(series.len())?;
    let measured_q = series.heat_flux();
    let m = metrics(&predictions[boundary..], &measured_q[boundary..])?;
    let predicted_u = predicted_u_from(&predictions, series, split_spec)?;
    let measured = measured_validation_u(series, split_spec)?;
    let extrapolation = detect_extrapolation(&run, series, split_spec, config.extrapolation.margin)?;
    let summary = CellSummary {
        metrics: m,
        predicted_u,
        relative_difference: relative_difference(predicted_u.validation.u, measured)?,
        epochs: run.epoch_losses.len(),
        best_epoch: run.best_epoch,
        best_loss: run.best_loss(),
        flagged_steps: extrapolation.n_flagged(),
    };
    Ok(TrainedCell {
        run,
        predictions,
        summary,
        extrapolation,
    })
}

/// File name stem of a cell, e.g. `LSTM100_1-2_seed0`.
pub fn cell_stem(architecture: Architecture, split: SplitSpec, seed: u64) -> String {
    format!("{architecture}_{}_seed{seed}", split.file_label())
}

/// Writes `report.json`, `report.txt`, `plots/<cell>.csv` (with scatter
/// files) and `extrapolation/<cell>.json` for every successful cell.
pub fn write_outputs(dir: impl AsRef<Path>, series: &MeasurementSeries, output: &GridOutput) -> Result<()> {
    let dir = dir.as_ref();
    let plots = dir.join("plots");
    let extrap = dir.join("extrapolation");
    for d in [dir, &plots, &extrap] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let write = |path: &Path, text: &str| std::fs::write(path, text).map_err(|e| Error::io(path, e));
    write(&dir.join("report.json"), &output.report.to_json())?;
    write(&dir.join("report.txt"), &output.report.to_table())?;
    for cell in &output.cells {
        let Ok(trained) = &cell.result else { continue };
        let stem = cell_stem(cell.architecture, cell.split, cell.seed);
        write_plot_data(&trained.predictions, series, cell.split, plots.join(format!("{stem}.csv")))?;
        let mut json = serde_json::to_string_pretty(&trained.extrapolation).expect("reports serialise");
        json.push('\n');
        write(&extrap.join(format!("{stem}.json")), &json)?;
    }
    Ok(())
}
