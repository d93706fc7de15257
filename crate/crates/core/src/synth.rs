//! Synthetic heat flux method data from a lumped RC wall.
//!
//! The wall is a chain of layers. Node temperatures sit at the layer
//! interfaces; half of each layer's heat capacity is lumped at each of its two
//! interface nodes. The interior and exterior air connect to the outermost
//! nodes through the surface resistances `r_si` and `r_se`:
//!
//! ```text
//! T_i ──r_si── n0 ──R_0── n1 ──R_1── … ── n_L ──r_se── T_e
//! ```
//!
//! Capacitive nodes are integrated with classical RK4 at a fixed sub-step no
//! larger than a tenth of the smallest nodal time constant. Massless nodes are
//! resolved algebraically by resistance-weighted interpolation between their
//! nearest capacitive (or air) neighbours. The sampled heat flux is the
//! interior surface flux `(T_i − T_n0) / r_si`; Gaussian sensor noise is added
//! after sampling and never feeds back into the physics.

use std::f64::consts::TAU;
use std::path::Path;

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MeasurementSeries, Sample};

/// Upper bound on RK4 sub-steps per sample interval.
pub const MAX_SUBSTEPS_PER_SAMPLE: usize = 1_000_000;

/// Sub-step as a fraction of the smallest nodal time constant.
pub const SUBSTEP_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    /// m²K/W, interior to exterior.
    pub layer_resistances: Vec<f64>,
    /// J/(m²K), same order as the resistances.
    pub layer_capacitances: Vec<f64>,
    /// Interior surface resistance, m²K/W.
    pub r_si: f64,
    /// Exterior surface resistance, m²K/W.
    pub r_se: f64,
}

impl WallSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWall(m));
        if self.layer_resistances.is_empty() {
            return bad("at least one layer is required".into());
        }
        if self.layer_resistances.len() != self.layer_capacitances.len() {
            return bad(format!(
                "{} resistances but {} capacitances",
                self.layer_resistances.len(),
                self.layer_capacitances.len()
            ));
        }
        if !(self.r_si > 0.0 && self.r_se > 0.0) || !self.r_si.is_finite() || !self.r_se.is_finite() {
            return bad("surface resistances must be positive".into());
        }
        if let Some(r) = self.layer_resistances.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return bad(format!("layer resistance {r} must be positive"));
        }
        if let Some(c) = self.layer_capacitances.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return bad(format!("layer capacitance {c} must be non-negative"));
        }
        Ok(())
    }

    pub fn total_resistance(&self) -> f64 {
        self.r_si + self.layer_resistances.iter().sum::<f64>() + self.r_se
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let wall: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        wall.validate()?;
        Ok(wall)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Steady-state thermal transmittance, `1 / (r_si + Σ R + r_se)`.
pub fn true_u(wall: &WallSpec) -> f64 {
    1.0 / wall.total_resistance()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorBoundary {
    pub mean_c: f64,
    #[serde(default)]
    pub noise_std: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepChange {
    /// Hours after the first sample.
    pub at_hours: f64,
    pub magnitude_c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorBoundary {
    pub mean_c: f64,
    #[serde(default)]
    pub amplitude_c: f64,
    #[serde(default = "default_period")]
    pub period_hours: f64,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub step: Option<StepChange>,
}

fn default_period() -> f64 {
    24.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Steady-state profile for the boundary values at the start of integration.
    #[default]
    Steady,
    /// Every node at the given temperature, °C.
    Uniform(f64),
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2019, 2, 22, 14, 0, 0).unwrap()
}

fn default_step() -> i64 {
    crate::series::DEFAULT_STEP_SECONDS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryScenario {
    /// Time from first to last sample; the series has `duration / step + 1` samples.
    pub duration_hours: f64,
    #[serde(default = "default_step")]
    pub step_seconds: i64,
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
    /// Simulated time before the first sample, hours.
    #[serde(default)]
    pub warmup_hours: f64,
    #[serde(default)]
    pub initial: InitialState,
    pub interior: InteriorBoundary,
    pub exterior: ExteriorBoundary,
    /// Sensor noise on the sampled heat flux, W/m².
    #[serde(default)]
    pub heat_flux_noise_std: f64,
}

impl BoundaryScenario {
    pub fn validate(&self) -> Result<usize> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.step_seconds <= 0 {
            return bad(format!("step must be positive, got {} s", self.step_seconds));
        }
        if !(self.duration_hours > 0.0) || !(self.warmup_hours >= 0.0) {
            return bad("duration must be positive and warm-up non-negative".into());
        }
        let intervals = self.duration_hours * 3600.0 / self.step_seconds as f64;
        if (intervals - intervals.round()).abs() > 1e-9 * intervals.max(1.0) {
            return bad(format!(
                "duration {} h is not a whole number of {} s steps",
                self.duration_hours, self.step_seconds
            ));
        }
        for sigma in [self.interior.noise_std, self.exterior.noise_std, self.heat_flux_noise_std] {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad(format!("noise standard deviation {sigma} must be non-negative"));
            }
        }
        if self.exterior.amplitude_c != 0.0 && !(self.exterior.period_hours > 0.0) {
            return bad("sinusoid period must be positive".into());
        }
        Ok(intervals.round() as usize + 1)
    }

    /// Noise-free interior air temperature at `t` seconds after the first sample.
    pub fn interior_at(&self, _t: f64) -> f64 {
        self.interior.mean_c
    }

    /// Noise-free exterior air temperature at `t` seconds after the first sample.
    pub fn exterior_at(&self, t: f64) -> f64 {
        let e = &self.exterior;
        let mut v = e.mean_c;
        if e.amplitude_c != 0.0 {
            v += e.amplitude_c * (TAU * t / (e.period_hours * 3600.0) + e.phase_rad).sin();
        }
        if let Some(step) = e.step {
            if t >= step.at_hours * 3600.0 {
                v += step.magnitude_c;
            }
        }
        v
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// State of the lumped wall: temperatures of the `L + 1` interface nodes.
#[derive(Clone, Debug)]
pub struct RcWall {
    /// Link resistances: `r_si`, the layer resistances, `r_se`.
    links: Vec<f64>,
    /// Heat capacity per node, J/(m²K).
    caps: Vec<f64>,
    temps: Vec<f64>,
}

impl RcWall {
    pub fn new(wall: &WallSpec) -> Result<Self> {
        wall.validate()?;
        let n_layers = wall.layer_resistances.len();
        let mut links = Vec::with_capacity(n_layers + 2);
        links.push(wall.r_si);
        links.extend_from_slice(&wall.layer_resistances);
        links.push(wall.r_se);
        let caps = (0..=n_layers)
            .map(|j| {
                let left = if j > 0 { wall.layer_capacitances[j - 1] } else { 0.0 };
                let right = if j < n_layers { wall.layer_capacitances[j] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(Self {
            links,
            caps,
            temps: vec![0.0; n_layers + 1],
        })
    }

    pub fn node_temperatures(&self) -> &[f64] {
        &self.temps
    }

    pub fn set_uniform(&mut self, temp: f64) {
        self.temps.fill(temp);
    }

    pub fn set_steady(&mut self, t_i: f64, t_e: f64) {
        let q = (t_i - t_e) / self.links.iter().sum::<f64>();
        let mut t = t_i;
        for (j, node) in self.temps.iter_mut().enumerate() {
            t -= q * self.links[j];
            *node = t;
        }
    }

    /// Smallest nodal time constant `C_j / (1/R_left + 1/R_right)`, where each
    /// resistance runs to the nearest capacitive node or air boundary. `None`
    /// for a massless wall.
    pub fn min_time_constant(&self) -> Option<f64> {
        let ext = self.extended_known();
        let mut best: Option<f64> = None;
        for (j, &c) in self.caps.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let m = j + 1;
            let left = ext[..m].iter().rposition(|&k| k).expect("air node is known");
            let right = m + 1 + ext[m + 1..].iter().position(|&k| k).expect("air node is known");
            let r_left: f64 = self.links[left..m].iter().sum();
            let r_right: f64 = self.links[m..right].iter().sum();
            let tau = c / (1.0 / r_left + 1.0 / r_right);
            best = Some(best.map_or(tau, |b: f64| b.min(tau)));
        }
        best
    }

    /// Known-temperature mask over `[air_i, nodes…, air_e]`.
    fn extended_known(&self) -> Vec<bool> {
        let mut known = Vec::with_capacity(self.temps.len() + 2);
        known.push(true);
        known.extend(self.caps.iter().map(|&c| c > 0.0));
        known.push(true);
        known
    }

    /// Extended temperatures `[T_i, nodes…, T_e]` with massless nodes solved
    /// from their known neighbours.
    fn extended(&self, temps: &[f64], t_i: f64, t_e: f64) -> Vec<f64> {
        let mut ext = Vec::with_capacity(temps.len() + 2);
        ext.push(t_i);
        ext.extend_from_slice(temps);
        ext.push(t_e);
        let known = self.extended_known();
        let mut a = 0;
        while a < ext.len() - 1 {
            let b = a + 1 + known[a + 1..].iter().position(|&k| k).expect("air node is known");
            if b > a + 1 {
                let total: f64 = self.links[a..b].iter().sum();
                let (ta, tb) = (ext[a], ext[b]);
                let mut r = 0.0;
                for m in a + 1..b {
                    r += self.links[m - 1];
                    ext[m] = ta - (ta - tb) * r / total;
                }
            }
            a = b;
        }
        ext
    }

    fn derivative(&self, temps: &[f64], t_i: f64, t_e: f64) -> Vec<f64> {
        let ext = self.extended(temps, t_i, t_e);
        let flux: Vec<f64> = (0..self.links.len())
            .map(|m| (ext[m] - ext[m + 1]) / self.links[m])
            .collect();
        self.caps
            .iter()
            .enumerate()
            .map(|(j, &c)| if c > 0.0 { (flux[j] - flux[j + 1]) / c } else { 0.0 })
            .collect()
    }

    /// Heat flux through every link, interior to exterior, W/m².
    pub fn link_fluxes(&self, t_i: f64, t_e: f64) -> Vec<f64> {
        let ext = self.extended(&self.temps, t_i, t_e);
        (0..self.links.len())
            .map(|m| (ext[m] - ext[m + 1]) / self.links[m])
            .collect()
    }

    /// Interior surface heat flux `(T_i − T_n0) / r_si`.
    pub fn surface_flux(&self, t_i: f64, t_e: f64) -> f64 {
        self.link_fluxes(t_i, t_e)[0]
    }

    /// Number of sub-steps needed to cover `interval` seconds.
    pub fn substeps(&self, interval: f64) -> Result<usize> {
        let Some(tau) = self.min_time_constant() else {
            return Ok(1);
        };
        let n = (interval / (SUBSTEP_FRACTION * tau)).ceil().max(1.0);
        if n > MAX_SUBSTEPS_PER_SAMPLE as f64 {
            return Err(Error::UnstableConfiguration(format!(
                "smallest time constant {tau:.3e} s needs {n:.0} sub-steps per {interval} s sample; \
                 limit is {MAX_SUBSTEPS_PER_SAMPLE}"
            )));
        }
        Ok(n as usize)
    }

    /// Integrates from `t0` over `n_sub` RK4 steps of `dt` seconds, with air
    /// temperatures given as functions of time.
    pub fn advance(&mut self, t0: f64, dt: f64, n_sub: usize, t_i: impl Fn(f64) -> f64, t_e: impl Fn(f64) -> f64) {
        if self.min_time_constant().is_none() {
            return;
        }
        let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + h * b).collect() };
        for s in 0..n_sub {
            let t = t0 + s as f64 * dt;
            let y = self.temps.clone();
            let k1 = self.derivative(&y, t_i(t), t_e(t));
            let mid = t + 0.5 * dt;
            let k2 = self.derivative(&axpy(&y, &k1, 0.5 * dt), t_i(mid), t_e(mid));
            let k3 = self.derivative(&axpy(&y, &k2, 0.5 * dt), t_i(mid), t_e(mid));
            let end = t + dt;
            let k4 = self.derivative(&axpy(&y, &k3, dt), t_i(end), t_e(end));
            for j in 0..y.len() {
                if self.caps[j] > 0.0 {
                    self.temps[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
        }
    }
}

/// Simulates a measurement campaign. Deterministic in `(wall, scenario, seed)`.
pub fn simulate(wall: &WallSpec, scenario: &BoundaryScenario, seed: u64) -> Result<MeasurementSeries> {
    let n_samples = scenario.validate()?;
    let mut rc = RcWall::new(wall)?;
    let step = scenario.step_seconds as f64;
    let n_sub = rc.substeps(step)?;
    let dt = step / n_sub as f64;

    let warmup_samples = (scenario.warmup_hours * 3600.0 / step).ceil() as usize;
    let t_start = -(warmup_samples as f64) * step;
    match scenario.initial {
        InitialState::Steady => rc.set_steady(scenario.interior_at(t_start), scenario.exterior_at(t_start)),
        InitialState::Uniform(temp) => rc.set_uniform(temp),
    }
    let ti = |t: f64| scenario.interior_at(t);
    let te = |t: f64| scenario.exterior_at(t);
    for k in 0..warmup_samples {
        rc.advance(t_start + k as f64 * step, dt, n_sub, ti, te);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |sigma: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    };
    let mut samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = k as f64 * step;
        if k > 0 {
            rc.advance(t - step, dt, n_sub, ti, te);
        }
        let (air_i, air_e) = (ti(t), te(t));
        let q = rc.surface_flux(air_i, air_e);
        samples.push(Sample::new(
            scenario.start + TimeDelta::seconds(scenario.step_seconds * k as i64),
            air_i + noise(scenario.interior.noise_std),
            air_e + noise(scenario.exterior.noise_std),
            q + noise(scenario.heat_flux_noise_std),
        ));
    }
    MeasurementSeries::with_step(samples, TimeDelta::seconds(scenario.step_seconds))
}

/// Wall and scenario presets shipped with the crate.
pub mod presets {
    use super::{BoundaryScenario, WallSpec};

    pub const SINGLE_LAYER_WALL: &str = include_str!("../presets/walls/single_layer.toml");
    pub const REFERENCE_WALL: &str = include_str!("../presets/walls/reference_wall.toml");
    pub const STEADY: &str = include_str!("../presets/scenarios/steady.toml");
    pub const SINUSOIDAL: &str = include_str!("../presets/scenarios/sinusoidal.toml");
    pub const STEP_CHANGE: &str = include_str!("../presets/scenarios/step_change.toml");

    /// One layer, R = 1.5 m²K/W with standard surface resistances (U ≈ 0.5988).
    pub fn single_layer_wall() -> WallSpec {
        WallSpec::from_toml(SINGLE_LAYER_WALL).expect("preset is valid")
    }

    /// Four-layer masonry wall with total R = 1.7065 m²K/W (U ≈ 0.586).
    pub fn reference_wall() -> WallSpec {
        WallSpec::from_toml(REFERENCE_WALL).expect("preset is valid")
    }

    /// Constant boundaries for 96 h, noise-free.
    pub fn steady() -> BoundaryScenario {
        BoundaryScenario::from_toml(STEADY).expect("preset is valid")
    }

    /// 490 samples at 10 min with a diurnal exterior sinusoid and sensor noise.
    pub fn sinusoidal() -> BoundaryScenario {
        BoundaryScenario::from_toml(SINUSOIDAL).expect("preset is valid")
    }

    /// As [`sinusoidal`] with a +8 K exterior step at 42 h.
    pub fn step_change() -> BoundaryScenario {
        BoundaryScenario::from_toml(STEP_CHANGE).expect("preset is valid")
    }
}
