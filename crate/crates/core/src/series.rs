//! Heat flux method measurement series.
//!
//! A [`MeasurementSeries`] is a uniformly sampled record of interior air
//! temperature, exterior air temperature and heat flux. Irregular data is
//! rejected, never repaired: the average-method U-value and backpropagation
//! through time both assume a constant sampling step.
//!
//! The canonical on-disk format is a UTF-8 CSV with the header
//! `timestamp,t_internal_c,t_external_c,heat_flux_w_m2`, ISO 8601 UTC
//! timestamps and plain decimal numbers.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["timestamp", "t_internal_c", "t_external_c", "heat_flux_w_m2"];

/// Default sampling step of the reference campaign (10 minutes).
pub const DEFAULT_STEP_SECONDS: i64 = 600;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub timestamp: DateTime<Utc>,
    /// Interior air temperature, °C.
    pub t_internal: f64,
    /// Exterior air temperature, °C.
    pub t_external: f64,
    /// Heat flux through the element, W/m².
    pub heat_flux: f64,
}

impl Sample {
    pub fn new(timestamp: DateTime<Utc>, t_internal: f64, t_external: f64, heat_flux: f64) -> Self {
        Self {
            timestamp,
            t_internal,
            t_external,
            heat_flux,
        }
    }

    /// Interior minus exterior air temperature, K.
    #[inline]
    pub fn delta_t(&self) -> f64 {
        self.t_internal - self.t_external
    }

    fn check_finite(&self, row: usize) -> Result<()> {
        for (value, column) in [
            (self.t_internal, CSV_HEADER[1]),
            (self.t_external, CSV_HEADER[2]),
            (self.heat_flux, CSV_HEADER[3]),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    column: column.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// A validated, uniformly sampled series with at least two samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSeries {
    samples: Vec<Sample>,
    step: TimeDelta,
}

impl MeasurementSeries {
    /// Builds a series, inferring the step from the first interval.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::SeriesTooShort { len: samples.len() });
        }
        let step = samples[1].timestamp - samples[0].timestamp;
        Self::with_step(samples, step)
    }

    /// Builds a series whose consecutive timestamps must differ by exactly `step`.
    pub fn with_step(samples: Vec<Sample>, step: TimeDelta) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::SeriesTooShort { len: samples.len() });
        }
        for (i, s) in samples.iter().enumerate() {
            s.check_finite(i + 1)?;
        }
        for (i, pair) in samples.windows(2).enumerate() {
            let row = i + 2;
            let dt = pair[1].timestamp - pair[0].timestamp;
            if dt <= TimeDelta::zero() {
                return Err(Error::NonMonotonicTimestamp { row });
            }
            if dt != step {
                return Err(Error::IrregularStep {
                    row,
                    expected_s: seconds(step),
                    found_s: seconds(dt),
                });
            }
        }
        Ok(Self { samples, step })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a valid series; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> TimeDelta {
        self.step
    }

    pub fn step_seconds(&self) -> f64 {
        seconds(self.step)
    }

    /// Time between the first and last sample (N − 1 intervals).
    pub fn span(&self) -> TimeDelta {
        self.samples[self.len() - 1].timestamp - self.samples[0].timestamp
    }

    pub fn span_hours(&self) -> f64 {
        seconds(self.span()) / 3600.0
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.samples[0].timestamp
    }

    pub fn t_internal(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_internal).collect()
    }

    pub fn t_external(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_external).collect()
    }

    pub fn heat_flux(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.heat_flux).collect()
    }

    /// Contiguous sub-series `range`, which must keep at least two samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let samples = self.samples[range].to_vec();
        if samples.len() < 2 {
            return Err(Error::SeriesTooShort { len: samples.len() });
        }
        Ok(Self {
            samples,
            step: self.step,
        })
    }

    /// Same timestamps and temperatures, heat flux replaced.
    pub fn with_heat_flux(&self, heat_flux: &[f64]) -> Result<Self> {
        if heat_flux.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: heat_flux.len(),
                right: self.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(heat_flux)
            .map(|(s, &q)| Sample { heat_flux: q, ..*s })
            .collect();
        Self::with_step(samples, self.step)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::MissingColumn(format!("{} ({e})", CSV_HEADER[0])))?
            .clone();
        for (i, expected) in CSV_HEADER.iter().enumerate() {
            if headers.get(i) != Some(*expected) {
                return Err(Error::MissingColumn((*expected).to_string()));
            }
        }
        if headers.len() != CSV_HEADER.len() {
            return Err(Error::MissingColumn(format!(
                "expected exactly {} columns, found {}",
                CSV_HEADER.len(),
                headers.len()
            )));
        }

        let mut samples = Vec::new();
        let mut step = None;
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::UnparsableValue {
                row,
                column: "<record>".to_string(),
                value: e.to_string(),
            })?;
            let field = |col: usize| -> Result<&str> {
                record.get(col).ok_or_else(|| Error::MissingColumn(CSV_HEADER[col].to_string()))
            };
            let raw_ts = field(0)?;
            let timestamp = DateTime::parse_from_rfc3339(raw_ts)
                .map_err(|_| Error::UnparsableValue {
                    row,
                    column: CSV_HEADER[0].to_string(),
                    value: raw_ts.to_string(),
                })?
                .with_timezone(&Utc);
            let mut values = [0.0; 3];
            for (k, v) in values.iter_mut().enumerate() {
                let raw = field(k + 1)?;
                *v = raw.parse::<f64>().map_err(|_| Error::UnparsableValue {
                    row,
                    column: CSV_HEADER[k + 1].to_string(),
                    value: raw.to_string(),
                })?;
            }
            let sample = Sample::new(timestamp, values[0], values[1], values[2]);
            sample.check_finite(row)?;

            // Regularity is checked while reading so the reported row is exact.
            if let Some(prev) = samples.last().map(|s: &Sample| s.timestamp) {
                let dt = timestamp - prev;
                if dt <= TimeDelta::zero() {
                    return Err(Error::NonMonotonicTimestamp { row });
                }
                match step {
                    None => step = Some(dt),
                    Some(expected) if expected != dt => {
                        return Err(Error::IrregularStep {
                            row,
                            expected_s: seconds(expected),
                            found_s: seconds(dt),
                        })
                    }
                    Some(_) => {}
                }
            }
            samples.push(sample);
        }
        Self::new(samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let to_io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        wtr.write_record(CSV_HEADER).map_err(to_io)?;
        for s in &self.samples {
            wtr.write_record([
                format_timestamp(s.timestamp),
                s.t_internal.to_string(),
                s.t_external.to_string(),
                s.heat_flux.to_string(),
            ])
            .map_err(to_io)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

/// Reads and validates a series in the canonical CSV format.
pub fn parse_csv(path: impl AsRef<Path>) -> Result<MeasurementSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    MeasurementSeries::read_csv(std::io::BufReader::new(file))
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub(crate) fn seconds(d: TimeDelta) -> f64 {
    d.num_milliseconds() as f64 / 1000.0
}

/// Chronological train/validation split as an exact fraction.
///
/// The training segment is the first `floor(numerator · N / denominator)`
/// samples; the remainder is validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SplitSpec {
    numerator: u32,
    denominator: u32,
}

impl SplitSpec {
    pub const QUARTER: SplitSpec = SplitSpec {
        numerator: 1,
        denominator: 4,
    };
    pub const HALF: SplitSpec = SplitSpec {
        numerator: 1,
        denominator: 2,
    };
    pub const TWO_THIRDS: SplitSpec = SplitSpec {
        numerator: 2,
        denominator: 3,
    };

    pub fn new(numerator: u32, denominator: u32) -> Result<Self> {
        if numerator == 0 || numerator >= denominator {
            return Err(Error::InvalidSplit(format!("{numerator}/{denominator}")));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    /// The three ratios of the reference study.
    pub fn study_splits() -> [SplitSpec; 3] {
        [Self::QUARTER, Self::HALF, Self::TWO_THIRDS]
    }

    pub fn train_fraction(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn train_len(&self, n: usize) -> usize {
        (n as u64 * self.numerator as u64 / self.denominator as u64) as usize
    }

    /// Label safe for file names, e.g. `1-4`.
    pub fn file_label(&self) -> String {
        format!("{}-{}", self.numerator, self.denominator)
    }

    /// Checks that both segments of an `n`-sample series keep two samples.
    pub fn check(&self, n: usize) -> Result<usize> {
        let train = self.train_len(n);
        let validation = n - train;
        if train < 2 || validation < 2 {
            return Err(Error::SplitTooSmall { train, validation });
        }
        Ok(train)
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for SplitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSplit(s.to_string());
        let (num, den) = s.trim().split_once(['/', '-']).ok_or_else(bad)?;
        let num = num.trim().parse().map_err(|_| bad())?;
        let den = den.trim().parse().map_err(|_| bad())?;
        SplitSpec::new(num, den)
    }
}

impl TryFrom<String> for SplitSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitSpec> for String {
    fn from(s: SplitSpec) -> String {
        s.to_string()
    }
}

/// Splits chronologically: training first, no shuffling.
pub fn split(series: &MeasurementSeries, spec: SplitSpec) -> Result<(MeasurementSeries, MeasurementSeries)> {
    let n = series.len();
    let boundary = spec.check(n)?;
    Ok((series.slice(0..boundary)?, series.slice(boundary..n)?))
}
