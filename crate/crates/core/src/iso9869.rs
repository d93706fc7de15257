//! Average-method U-value and the error metrics used to compare predicted and
//! measured heat flux.
//!
//! The average method estimates thermal transmittance as the ratio of summed
//! heat flux to summed interior-minus-exterior temperature difference. Sums use
//! a single forward compensated pass so results are reproducible bit for bit.
//!
//! [`stability_check`] is a simplified, non-normative convergence test: the
//! series must span at least 72 h and dropping the final window must not move
//! the estimate by more than a relative tolerance.

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::series::{seconds, MeasurementSeries};

/// Default lower bound on |Σ ΔT| (K·count) below which no U is reported.
pub const DEFAULT_MIN_DELTA_T_SUM: f64 = 1e-9;

/// Minimum span accepted by [`stability_check`], hours.
pub const MIN_STABLE_SPAN_HOURS: f64 = 72.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UValueEstimate {
    /// W/(m²K).
    pub u: f64,
    pub n_samples: usize,
    /// Mean interior-minus-exterior temperature difference, K.
    pub mean_delta_t: f64,
    /// Set when `u < 0`, i.e. flux and temperature difference have opposite
    /// signs. Usually a reversed sensor; the value is still returned.
    pub reversed_flux: bool,
}

/// Average-method U over a whole series.
pub fn average_u_value(series: &MeasurementSeries) -> Result<UValueEstimate> {
    average_u_value_with(series, DEFAULT_MIN_DELTA_T_SUM)
}

pub fn average_u_value_with(series: &MeasurementSeries, min_delta_t_sum: f64) -> Result<UValueEstimate> {
    let q: Vec<f64> = series.heat_flux();
    let dt: Vec<f64> = series.samples().iter().map(|s| s.delta_t()).collect();
    u_value_from(&q, &dt, min_delta_t_sum)
}

/// Average-method U from parallel heat-flux and temperature-difference
/// sequences. Used for predicted flux paired with measured temperatures.
pub fn u_value_from(heat_flux: &[f64], delta_t: &[f64], min_delta_t_sum: f64) -> Result<UValueEstimate> {
    if heat_flux.len() != delta_t.len() {
        return Err(Error::LengthMismatch {
            left: heat_flux.len(),
            right: delta_t.len(),
        });
    }
    if heat_flux.len() < 2 {
        return Err(Error::SeriesTooShort { len: heat_flux.len() });
    }
    let mut q_sum = CompensatedSum::new();
    let mut dt_sum = CompensatedSum::new();
    for (&q, &dt) in heat_flux.iter().zip(delta_t) {
        q_sum.add(q);
        dt_sum.add(dt);
    }
    estimate(q_sum, dt_sum, heat_flux.len(), min_delta_t_sum)
}

fn estimate(q_sum: CompensatedSum, dt_sum: CompensatedSum, n: usize, min_delta_t_sum: f64) -> Result<UValueEstimate> {
    let den = dt_sum.value();
    if den.abs() < min_delta_t_sum || !den.is_finite() {
        return Err(Error::DegenerateTemperatureDifference { sum: den });
    }
    let u = q_sum.value() / den;
    let reversed_flux = u < 0.0;
    if reversed_flux {
        log::warn!("negative U-value {u:.4} W/(m²K): heat flux opposes the temperature difference");
    }
    Ok(UValueEstimate {
        u,
        n_samples: n,
        mean_delta_t: den / n as f64,
        reversed_flux,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningTrace {
    /// `(k, U over samples 0..=k)` for every usable prefix, k ≥ 1.
    pub points: Vec<(usize, UValueEstimate)>,
    /// Prefix end indices whose temperature-difference sum was degenerate.
    pub degenerate: Vec<usize>,
}

impl RunningTrace {
    pub fn last(&self) -> Option<&UValueEstimate> {
        self.points.last().map(|(_, e)| e)
    }
}

/// Prefix-wise average-method U. The last point equals [`average_u_value`]
/// exactly because both use the same accumulation order.
pub fn running_u_trace(series: &MeasurementSeries) -> RunningTrace {
    let mut q_sum = CompensatedSum::new();
    let mut dt_sum = CompensatedSum::new();
    let mut trace = RunningTrace {
        points: Vec::with_capacity(series.len() - 1),
        degenerate: Vec::new(),
    };
    for (k, s) in series.samples().iter().enumerate() {
        q_sum.add(s.heat_flux);
        dt_sum.add(s.delta_t());
        if k == 0 {
            continue;
        }
        match estimate(q_sum, dt_sum, k + 1, DEFAULT_MIN_DELTA_T_SUM) {
            Ok(e) => trace.points.push((k, e)),
            Err(_) => trace.degenerate.push(k),
        }
    }
    trace
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub span_hours: f64,
    pub span_ok: bool,
    pub u_all: f64,
    /// U with the final window removed.
    pub u_without_last_window: f64,
    pub relative_change: f64,
    pub window_hours: f64,
    pub tolerance: f64,
}

/// Simplified convergence check; see the module docs.
pub fn stability_check(series: &MeasurementSeries, window: TimeDelta, tol: f64) -> Result<StabilityReport> {
    let span = series.span();
    let span_hours = seconds(span) / 3600.0;
    let window_hours = seconds(window) / 3600.0;
    if window <= TimeDelta::zero() {
        return Err(Error::InvalidScenario(format!("stability window must be positive, got {window_hours} h")));
    }
    if span < window * 3 {
        return Err(Error::SpanTooShort {
            span_hours,
            required_hours: 3.0 * window_hours,
        });
    }
    let all = average_u_value(series)?;
    let cutoff = series.samples()[series.len() - 1].timestamp - window;
    let keep = series.samples().iter().take_while(|s| s.timestamp <= cutoff).count();
    let truncated = average_u_value(&series.slice(0..keep)?)?;
    let relative_change = (all.u - truncated.u).abs() / all.u.abs();
    let span_ok = span_hours >= MIN_STABLE_SPAN_HOURS;
    Ok(StabilityReport {
        stable: span_ok && relative_change <= tol,
        span_hours,
        span_ok,
        u_all: all.u,
        u_without_last_window: truncated.u,
        relative_change,
        window_hours,
        tolerance: tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mse: f64,
    pub mae: f64,
}

pub fn metrics(predicted: &[f64], actual: &[f64]) -> Result<MetricSet> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sq = CompensatedSum::new();
    let mut abs = CompensatedSum::new();
    for (p, a) in predicted.iter().zip(actual) {
        let e = p - a;
        sq.add(e * e);
        abs.add(e.abs());
    }
    let n = predicted.len() as f64;
    let mse = sq.value() / n;
    Ok(MetricSet {
        rmse: mse.sqrt(),
        mse,
        mae: abs.value() / n,
    })
}

/// `|measured − predicted| / |measured|`.
pub fn relative_difference(predicted_u: f64, measured_u: f64) -> Result<f64> {
    if measured_u == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((measured_u - predicted_u).abs() / measured_u.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Sample;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn series_from(values: &[(f64, f64, f64)]) -> MeasurementSeries {
        let t0 = Utc.with_ymd_and_hms(2019, 2, 22, 0, 0, 0).unwrap();
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &(ti, te, q))| Sample::new(t0 + TimeDelta::seconds(600 * i as i64), ti, te, q))
            .collect();
        MeasurementSeries::new(samples).unwrap()
    }

    fn constant(n: usize) -> MeasurementSeries {
        series_from(&vec![(25.0, 5.0, 10.0); n])
    }

    #[test]
    fn constant_ratio() {
        for n in [2, 7, 490] {
            let e = average_u_value(&constant(n)).unwrap();
            assert_eq!(e.u, 0.5);
            assert_eq!(e.n_samples, n);
            assert_eq!(e.mean_delta_t, 20.0);
            assert!(!e.reversed_flux);
        }
    }

    #[test]
    fn hand_sum() {
        let s = series_from(&[(22.0, 0.0, 12.0), (18.0, 0.0, 8.0)]);
        assert_eq!(average_u_value(&s).unwrap().u, 0.5);
    }

    #[test]
    fn degenerate_and_reversed() {
        let s = series_from(&[(20.0, 21.0, 3.0), (21.0, 20.0, 3.0)]);
        assert!(matches!(
            average_u_value(&s),
            Err(Error::DegenerateTemperatureDifference { .. })
        ));
        let s = series_from(&[(20.0, 5.0, -3.0), (20.0, 5.0, -3.0)]);
        let e = average_u_value(&s).unwrap();
        assert_eq!(e.u, -0.2);
        assert!(e.reversed_flux);
    }

    #[test]
    fn running_trace_examples() {
        let trace = running_u_trace(&constant(50));
        assert_eq!(trace.points.len(), 49);
        assert!(trace.points.iter().all(|(_, e)| e.u == 0.5));

        let two = series_from(&[(22.0, 0.0, 12.0), (18.0, 0.0, 8.0)]);
        let trace = running_u_trace(&two);
        assert_eq!(trace.points.len(), 1);
        assert_eq!(trace.points[0].1, average_u_value(&two).unwrap());
    }

    #[test]
    fn running_trace_flags_degenerate_prefix() {
        let s = series_from(&[(20.0, 21.0, 1.0), (21.0, 20.0, 1.0), (25.0, 5.0, 10.0)]);
        let trace = running_u_trace(&s);
        assert_eq!(trace.degenerate, vec![1]);
        assert_eq!(trace.points.len(), 1);
        assert_eq!(trace.points[0].0, 2);
    }

    #[test]
    fn stability_examples() {
        // 96 h at 10 min
        let long = constant(96 * 6 + 1);
        let r = stability_check(&long, TimeDelta::hours(24), 0.05).unwrap();
        assert!(r.stable && r.span_ok);
        assert_eq!(r.relative_change, 0.0);

        let short = constant(48 * 6 + 1);
        assert!(matches!(
            stability_check(&short, TimeDelta::hours(24), 0.05),
            Err(Error::SpanTooShort { .. })
        ));

        // Long enough for the window rule but below 72 h.
        let mid = constant(60 * 6 + 1);
        let r = stability_check(&mid, TimeDelta::hours(12), 0.05).unwrap();
        assert!(!r.span_ok && !r.stable);
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.rmse, m.mse, m.mae), (0.0, 0.0, 0.0));
        let m = metrics(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(m.mse, 5.0);
        assert_eq!(m.mae, 2.0);
        assert!((m.rmse - 5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(metrics(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn relative_difference_examples() {
        assert_eq!(relative_difference(0.586, 0.586).unwrap(), 0.0);
        assert!((relative_difference(0.534, 0.586).unwrap() - 0.0887).abs() < 5e-5);
        assert!((relative_difference(0.615, 0.586).unwrap() - 0.0495).abs() < 5e-5);
        assert!(matches!(relative_difference(0.5, 0.0), Err(Error::ZeroReference)));
    }

    fn arb_values() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((15.0f64..25.0, -10.0f64..10.0, 0.0f64..30.0), 2..60)
    }

    proptest! {
        #[test]
        fn reordering_invariance(values in arb_values(), seed in any::<u64>()) {
            let mut shuffled = values.clone();
            // deterministic Fisher-Yates with an LCG
            let mut state = seed;
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = average_u_value(&series_from(&values)).unwrap().u;
            let b = average_u_value(&series_from(&shuffled)).unwrap().u;
            prop_assert!((a - b).abs() <= 1e-13 * a.abs());
        }

        #[test]
        fn scaling(values in arb_values(), c in 0.1f64..10.0) {
            let base = average_u_value(&series_from(&values)).unwrap().u;
            let scaled_q: Vec<_> = values.iter().map(|&(ti, te, q)| (ti, te, c * q)).collect();
            let scaled_dt: Vec<_> = values.iter().map(|&(ti, te, q)| (c * ti, c * te, q)).collect();
            let uq = average_u_value(&series_from(&scaled_q)).unwrap().u;
            let udt = average_u_value(&series_from(&scaled_dt)).unwrap().u;
            prop_assert!((uq - c * base).abs() <= 1e-12 * (c * base).abs().max(1e-12));
            prop_assert!((udt - base / c).abs() <= 1e-12 * (base / c).abs().max(1e-12));
        }

        #[test]
        fn trace_ends_at_average(values in arb_values()) {
            let s = series_from(&values);
            let trace = running_u_trace(&s);
            prop_assert_eq!(trace.last().copied(), Some(average_u_value(&s).unwrap()));
        }
    }
}
