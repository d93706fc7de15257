use serde::{Deserialize, Serialize};

use crate::architectures::TrainingRun;
use crate::error::Result;
use crate::series::{MeasurementSeries, SplitSpec};

/// Input channels watched for extrapolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputChannel {
    TInternal,
    TExternal,
}

impl InputChannel {
    pub const ALL: [InputChannel; 2] = [InputChannel::TInternal, InputChannel::TExternal];

    fn index(self) -> usize {
        match self {
            InputChannel::TInternal => 0,
            InputChannel::TExternal => 1,
        }
    }
}

/// Validation step whose inputs left the training range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedStep {
    /// Index into the full series.
    pub index: usize,
    pub channels: Vec<InputChannel>,
}

/// Maximal run of consecutive flagged steps, inclusive on both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagInterval {
    pub start: usize,
    pub end: usize,
    /// Channels outside the range at any step of the interval.
    pub channels: Vec<InputChannel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    pub split: SplitSpec,
    /// First validation index.
    pub boundary: usize,
    pub margin: f64,
    /// One entry per validation step, `true` if any channel is out of range.
    pub flags: Vec<bool>,
    pub flagged: Vec<FlaggedStep>,
    pub intervals: Vec<FlagInterval>,
}

impl ExtrapolationReport {
    pub fn n_flagged(&self) -> usize {
        self.flagged.len()
    }

    /// Intervals counting only excursions of `channel`.
    pub fn channel_intervals(&self, channel: InputChannel) -> Vec<FlagInterval> {
        intervals(
            self.flagged
                .iter()
                .filter(|f| f.channels.contains(&channel))
                .map(|f| FlaggedStep {
                    index: f.index,
                    channels: vec![channel],
                }),
        )
    }
}

/// Flags validation steps whose normalised `T_i` or `T_e` falls outside the
/// training-segment range widened by `margin` on each side.
pub fn detect_extrapolation(
    run: &TrainingRun,
    series: &MeasurementSeries,
    split: SplitSpec,
    margin: f64,
) -> Result<ExtrapolationReport> {
    let boundary = split.check(series.len())?;
    let norm = &run.normalizer;
    let bounds = InputChannel::ALL.map(|c| {
        let r = run.input_range[c.index()];
        (norm.apply(c.index(), r.min) - margin, norm.apply(c.index(), r.max) + margin)
    });
    let mut flags = Vec::with_capacity(series.len() - boundary);
    let mut flagged = Vec::new();
    for (index, s) in series.samples().iter().enumerate().skip(boundary) {
        let raw = [s.t_internal, s.t_external];
        let channels: Vec<InputChannel> = InputChannel::ALL
            .into_iter()
            .filter(|c| {
                let z = norm.apply(c.index(), raw[c.index()]);
                let (lo, hi) = bounds[c.index()];
                z < lo || z > hi
            })
            .collect();
        flags.push(!channels.is_empty());
        if !channels.is_empty() {
            flagged.push(FlaggedStep { index, channels });
        }
    }
    Ok(ExtrapolationReport {
        split,
        boundary,
        margin,
        flags,
        intervals: intervals(flagged.iter().cloned()),
        flagged,
    })
}

fn intervals(steps: impl Iterator<Item = FlaggedStep>) -> Vec<FlagInterval> {
    let mut out: Vec<FlagInterval> = Vec::new();
    for step in steps {
        match out.last_mut() {
            Some(last) if last.end + 1 == step.index => {
                last.end = step.index;
                for c in step.channels {
                    if !last.channels.contains(&c) {
                        last.channels.push(c);
                    }
                }
            }
            _ => out.push(FlagInterval {
                start: step.index,
                end: step.index,
                channels: step.channels,
            }),
        }
    }
    for interval in &mut out {
        interval.channels.sort_by_key(|c| c.index());
    }
    out
}
