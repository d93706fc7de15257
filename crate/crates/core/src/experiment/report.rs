use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::architectures::{Architecture, PredictedU};
use crate::error::{Error, Result};
use crate::iso9869::MetricSet;
use crate::series::SplitSpec;

pub const REPORT_FORMAT: &str = "hfm-report";
pub const REPORT_VERSION: u32 = 1;

/// Result of one (architecture, split, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    /// Global seed the cell seed was derived from.
    pub seed: u64,
    pub cell_seed: u64,
    pub outcome: CellOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(CellSummary),
    Failed { error: String },
}

impl CellOutcome {
    pub fn summary(&self) -> Option<&CellSummary> {
        match self {
            CellOutcome::Ok(s) => Some(s),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    /// Validation-segment heat-flux errors, W/m².
    pub metrics: MetricSet,
    pub predicted_u: PredictedU,
    /// `|predicted − measured| / measured` on the validation segment.
    pub relative_difference: f64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub flagged_steps: usize,
}

/// Spread across the successful seeds of a row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub rmse_min: f64,
    pub rmse_max: f64,
    pub predicted_u_min: f64,
    pub predicted_u_max: f64,
}

/// Seed-averaged row values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSummary {
    pub successful: usize,
    pub metrics: MetricSet,
    pub predicted_u_validation: f64,
    pub predicted_u_full: f64,
    pub relative_difference: f64,
    pub spread: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub architecture: Architecture,
    pub split: SplitSpec,
    pub best_in_split: bool,
    /// `None` when every seed failed.
    pub summary: Option<RowSummary>,
    pub seeds: Vec<SeedResult>,
}

/// Average-method U of the measured series for one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMeasurement {
    pub split: SplitSpec,
    pub boundary: usize,
    pub measured_u_validation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UValueReport {
    pub format: String,
    pub version: u32,
    pub n_samples: usize,
    pub seeds: Vec<u64>,
    pub measured_u_full: Option<f64>,
    pub splits: Vec<SplitMeasurement>,
    pub rows: Vec<ReportRow>,
}

impl ReportRow {
    pub(crate) fn new(architecture: Architecture, split: SplitSpec, seeds: Vec<SeedResult>, measured: Option<f64>) -> Self {
        let ok: Vec<&CellSummary> = seeds.iter().filter_map(|s| s.outcome.summary()).collect();
        let summary = (!ok.is_empty()).then(|| {
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&CellSummary) -> f64| ok.iter().map(|c| f(c)).sum::<f64>() / n;
            let min = |f: &dyn Fn(&CellSummary) -> f64| ok.iter().map(|c| f(c)).fold(f64::INFINITY, f64::min);
            let max = |f: &dyn Fn(&CellSummary) -> f64| ok.iter().map(|c| f(c)).fold(f64::NEG_INFINITY, f64::max);
            let u_val = mean(&|c| c.predicted_u.validation.u);
            RowSummary {
                successful: ok.len(),
                metrics: MetricSet {
                    rmse: mean(&|c| c.metrics.rmse),
                    mse: mean(&|c| c.metrics.mse),
                    mae: mean(&|c| c.metrics.mae),
                },
                predicted_u_validation: u_val,
                predicted_u_full: mean(&|c| c.predicted_u.full.u),
                relative_difference: match measured {
                    Some(m) => (u_val - m).abs() / m.abs(),
                    None => mean(&|c| c.relative_difference),
                },
                spread: Spread {
                    rmse_min: min(&|c| c.metrics.rmse),
                    rmse_max: max(&|c| c.metrics.rmse),
                    predicted_u_min: min(&|c| c.predicted_u.validation.u),
                    predicted_u_max: max(&|c| c.predicted_u.validation.u),
                },
            }
        });
        Self {
            architecture,
            split,
            best_in_split: false,
            summary,
            seeds,
        }
    }
}

impl UValueReport {
    pub(crate) fn new(
        n_samples: usize,
        seeds: Vec<u64>,
        measured_u_full: Option<f64>,
        splits: Vec<SplitMeasurement>,
        mut rows: Vec<ReportRow>,
    ) -> Self {
        mark_best(&mut rows);
        Self {
            format: REPORT_FORMAT.to_string(),
            version: REPORT_VERSION,
            n_samples,
            seeds,
            measured_u_full,
            splits,
            rows,
        }
    }

    pub fn row(&self, architecture: Architecture, split: SplitSpec) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.architecture == architecture && r.split == split)
    }

    pub fn measured_u(&self, split: SplitSpec) -> Option<f64> {
        self.splits.iter().find(|s| s.split == split).and_then(|s| s.measured_u_validation)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::format("<report>", e))?;
        if r.format != REPORT_FORMAT || r.version != REPORT_VERSION {
            return Err(Error::format(
                "<report>",
                format!("expected {REPORT_FORMAT} v{REPORT_VERSION}, found {} v{}", r.format, r.version),
            ));
        }
        Ok(r)
    }

    /// Plain-text table: type, ratio, RMSE, MSE, MAE, predicted U, relative
    /// difference, with `*` on the lowest RMSE of each ratio.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        match self.measured_u_full {
            Some(u) => writeln!(out, "measured U (full series): {u:.3} W/(m2 K)").unwrap(),
            None => writeln!(out, "measured U (full series): n/a").unwrap(),
        }
        for s in &self.splits {
            match s.measured_u_validation {
                Some(u) => writeln!(out, "measured U (validation {}): {u:.3} W/(m2 K)", s.split).unwrap(),
                None => writeln!(out, "measured U (validation {}): n/a", s.split).unwrap(),
            }
        }
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        writeln!(out, "seeds: {}", seeds.join(", ")).unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<12} {:>6} {:>9} {:>9} {:>9} {:>10} {:>10}",
            "type", "ratio", "RMSE", "MSE", "MAE", "pred. U", "rel. diff"
        )
        .unwrap();
        let mut last_arch = None;
        for row in &self.rows {
            let name = if last_arch == Some(row.architecture) {
                String::new()
            } else {
                row.architecture.to_string()
            };
            last_arch = Some(row.architecture);
            match &row.summary {
                Some(s) => {
                    let rmse = format!("{:.3}{}", s.metrics.rmse, if row.best_in_split { "*" } else { "" });
                    writeln!(
                        out,
                        "{:<12} {:>6} {:>9} {:>9.3} {:>9.3} {:>10.3} {:>9.2}%",
                        name,
                        row.split.to_string(),
                        rmse,
                        s.metrics.mse,
                        s.metrics.mae,
                        s.predicted_u_validation,
                        100.0 * s.relative_difference
                    )
                    .unwrap();
                }
                None => {
                    let reason = row
                        .seeds
                        .iter()
                        .find_map(|s| match &s.outcome {
                            CellOutcome::Failed { error } => Some(error.as_str()),
                            CellOutcome::Ok(_) => None,
                        })
                        .unwrap_or("no seeds");
                    writeln!(out, "{:<12} {:>6} failed: {reason}", name, row.split.to_string()).unwrap();
                }
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "* lowest RMSE for the train/validation ratio").unwrap();
        out
    }
}

/// Marks the lowest mean RMSE per split; the first row wins ties.
fn mark_best(rows: &mut [ReportRow]) {
    let splits: Vec<SplitSpec> = {
        let mut v: Vec<SplitSpec> = Vec::new();
        for r in rows.iter() {
            if !v.contains(&r.split) {
                v.push(r.split);
            }
        }
        v
    };
    for split in splits {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in rows.iter().enumerate() {
            if r.split != split {
                continue;
            }
            if let Some(s) = &r.summary {
                if best.is_none_or(|(_, b)| s.metrics.rmse < b) {
                    best = Some((i, s.metrics.rmse));
                }
            }
        }
        if let Some((i, _)) = best {
            rows[i].best_in_split = true;
        }
    }
}
