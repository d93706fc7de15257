use std::path::{Path, PathBuf};

use crate::architectures::{predict, TrainingRun};
use crate::error::{Error, Result};
use crate::series::{format_timestamp, MeasurementSeries, SplitSpec};

pub const PLOT_HEADER: [&str; 5] = ["index", "timestamp", "measured_q", "predicted_q", "boundary"];
pub const SCATTER_HEADER: [&str; 3] = ["segment", "measured_q", "predicted_q"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotFiles {
    pub series: PathBuf,
    pub scatter: PathBuf,
}

/// Scatter file written next to `path`: `a/b.csv` becomes `a/b_scatter.csv`.
pub fn scatter_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_scatter.{ext}"))
}

/// Predicts over `series` and writes the plot and scatter files.
pub fn export_plot_data(
    run: &TrainingRun,
    series: &MeasurementSeries,
    split: SplitSpec,
    path: impl AsRef<Path>,
) -> Result<PlotFiles> {
    let predictions = predict(run, series)?;
    write_plot_data(&predictions, series, split, path)
}

/// Writes `(index, timestamp, measured q, predicted q, boundary)` per sample,
/// where `boundary` is 1 only at the first validation sample, and a scatter
/// file of measured against predicted flux labelled by segment.
pub fn write_plot_data(
    predictions: &[f64],
    series: &MeasurementSeries,
    split: SplitSpec,
    path: impl AsRef<Path>,
) -> Result<PlotFiles> {
    if predictions.len() != series.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: series.len(),
        });
    }
    let boundary = split.check(series.len())?;
    let path = path.as_ref();
    let scatter = scatter_path(path);

    let mut w = writer(path)?;
    let mut s = writer(&scatter)?;
    w.write_record(PLOT_HEADER).map_err(csv_error(path))?;
    s.write_record(SCATTER_HEADER).map_err(csv_error(&scatter))?;
    for (k, (sample, pred)) in series.samples().iter().zip(predictions).enumerate() {
        let measured = sample.heat_flux.to_string();
        let predicted = pred.to_string();
        let marker = if k == boundary { "1" } else { "0" };
        w.write_record([
            k.to_string().as_str(),
            &format_timestamp(sample.timestamp),
            &measured,
            &predicted,
            marker,
        ])
        .map_err(csv_error(path))?;
        let segment = if k < boundary { "train" } else { "validation" };
        s.write_record([segment, &measured, &predicted]).map_err(csv_error(&scatter))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    s.flush().map_err(|e| Error::io(&scatter, e))?;
    Ok(PlotFiles {
        series: path.to_path_buf(),
        scatter,
    })
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}
