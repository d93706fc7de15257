//! RC wall simulator against closed-form and brute-force oracles.

use chrono::TimeDelta;
use hfm_core::iso9869::{average_u_value, running_u_trace, stability_check};
use hfm_core::synth::{
    presets, simulate, true_u, BoundaryScenario, ExteriorBoundary, InitialState, InteriorBoundary, RcWall, StepChange,
    WallSpec,
};

fn single_layer(r: f64, c: f64) -> WallSpec {
    WallSpec {
        layer_resistances: vec![r],
        layer_capacitances: vec![c],
        r_si: 0.13,
        r_se: 0.04,
    }
}

fn constant(hours: f64, ti: f64, te: f64, initial: InitialState) -> BoundaryScenario {
    BoundaryScenario {
        duration_hours: hours,
        step_seconds: 600,
        start: "2019-02-22T14:00:00Z".parse().unwrap(),
        warmup_hours: 0.0,
        initial,
        interior: InteriorBoundary {
            mean_c: ti,
            noise_std: 0.0,
        },
        exterior: ExteriorBoundary {
            mean_c: te,
            amplitude_c: 0.0,
            period_hours: 24.0,
            phase_rad: 0.0,
            noise_std: 0.0,
            step: None,
        },
        heat_flux_noise_std: 0.0,
    }
}

/// Closed-form response of the two-node (single layer) network to constant
/// boundaries, via the eigen-decomposition of its symmetric 2×2 system.
struct TwoNode {
    lambda: [f64; 2],
    vecs: [[f64; 2]; 2],
    steady: [f64; 2],
    r_si: f64,
    ti: f64,
}

impl TwoNode {
    fn new(w: &WallSpec, ti: f64, te: f64) -> Self {
        let (a, r, b) = (w.r_si, w.layer_resistances[0], w.r_se);
        let k = 2.0 / w.layer_capacitances[0];
        let p = -k * (1.0 / a + 1.0 / r);
        let s = k / r;
        let q = -k * (1.0 / r + 1.0 / b);
        let mean = 0.5 * (p + q);
        let rad = (0.25 * (p - q).powi(2) + s * s).sqrt();
        let lambda = [mean + rad, mean - rad];
        let vecs = lambda.map(|l| {
            let v = [s, l - p];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        });
        let flux = (ti - te) / w.total_resistance();
        let steady = [ti - flux * a, ti - flux * (a + r)];
        Self {
            lambda,
            vecs,
            steady,
            r_si: a,
            ti,
        }
    }

    fn slowest_time_constant(&self) -> f64 {
        -1.0 / self.lambda[0]
    }

    fn surface_flux(&self, t0: [f64; 2], t: f64) -> f64 {
        let d = [t0[0] - self.steady[0], t0[1] - self.steady[1]];
        let mut node0 = self.steady[0];
        for k in 0..2 {
            let coef = self.vecs[k][0] * d[0] + self.vecs[k][1] * d[1];
            node0 += coef * self.vecs[k][0] * (self.lambda[k] * t).exp();
        }
        (self.ti - node0) / self.r_si
    }
}

#[test]
fn relaxation_matches_closed_form() {
    let wall = single_layer(1.5, 60_000.0);
    let oracle = TwoNode::new(&wall, 20.0, 0.0);
    let hours = 10.0 * oracle.slowest_time_constant() / 3600.0;
    let hours = (hours * 6.0).ceil() / 6.0;
    let series = simulate(&wall, &constant(hours, 20.0, 0.0, InitialState::Uniform(5.0)), 0).unwrap();

    for (k, s) in series.samples().iter().enumerate() {
        let expected = oracle.surface_flux([5.0, 5.0], 600.0 * k as f64);
        assert!(
            (s.heat_flux - expected).abs() < 1e-6 * expected.abs().max(1.0),
            "sample {k}: {} vs {expected}",
            s.heat_flux
        );
    }
    let final_q = series.samples().last().unwrap().heat_flux;
    let steady = true_u(&wall) * 20.0;
    assert!((final_q - steady).abs() / steady < 1e-3);
}

#[test]
fn constant_boundaries_converge_for_layered_wall() {
    let wall = presets::reference_wall();
    let r_total: f64 = wall.total_resistance();
    let c_total: f64 = wall.layer_capacitances.iter().sum();
    // R_total·C_total bounds the slowest mode of a series RC chain.
    let hours = ((10.0 * r_total * c_total / 3600.0) * 6.0).ceil() / 6.0;
    let series = simulate(&wall, &constant(hours, 21.0, -4.0, InitialState::Uniform(10.0)), 0).unwrap();
    let steady = true_u(&wall) * 25.0;
    let last = series.samples().last().unwrap().heat_flux;
    assert!((last - steady).abs() / steady < 1e-3, "{last} vs {steady}");
}

#[test]
fn steady_state_energy_consistency() {
    let wall = presets::reference_wall();
    let mut rc = RcWall::new(&wall).unwrap();
    rc.set_uniform(0.0);
    let r_total = wall.total_resistance();
    let c_total: f64 = wall.layer_capacitances.iter().sum();
    let horizon = 10.0 * r_total * c_total;
    let n_sub = rc.substeps(600.0).unwrap();
    let samples = (horizon / 600.0).ceil() as usize;
    for k in 0..samples {
        rc.advance(600.0 * k as f64, 600.0 / n_sub as f64, n_sub, |_| 20.0, |_| -5.0);
    }
    let fluxes = rc.link_fluxes(20.0, -5.0);
    let q0 = fluxes[0];
    for f in &fluxes {
        assert!((f - q0).abs() / q0.abs() < 1e-3, "{fluxes:?}");
    }
}

#[test]
fn sinusoidal_response_is_periodic() {
    let wall = presets::reference_wall();
    let mut sc = presets::sinusoidal();
    sc.interior.noise_std = 0.0;
    sc.exterior.noise_std = 0.0;
    sc.heat_flux_noise_std = 0.0;
    sc.warmup_hours = 240.0;
    let q = simulate(&wall, &sc, 0).unwrap().heat_flux();
    let period = 144; // 24 h at 10 min
    let n = q.len();
    let scale = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for k in n - period..n {
        let dev = (q[k] - q[k - period]).abs() / scale;
        assert!(dev < 5e-3, "sample {k}: deviation {dev}");
    }
}

#[test]
fn steady_average_u_recovers_true_u() {
    let wall = presets::single_layer_wall();
    let s = simulate(&wall, &presets::steady(), 0).unwrap();
    let u = average_u_value(&s).unwrap().u;
    assert!((u - true_u(&wall)).abs() / true_u(&wall) < 1e-2);

    // Post-transient window from a cold start.
    let wall = presets::reference_wall();
    let r_total = wall.total_resistance();
    let c_total: f64 = wall.layer_capacitances.iter().sum();
    let settle = (10.0 * r_total * c_total / 600.0).ceil() as usize;
    let s = simulate(&wall, &constant(((settle + 300) as f64) / 6.0, 20.0, 0.0, InitialState::Uniform(0.0)), 0).unwrap();
    let tail = s.slice(settle..s.len()).unwrap();
    let u = average_u_value(&tail).unwrap().u;
    assert!((u - true_u(&wall)).abs() / true_u(&wall) < 1e-2);
}

#[test]
fn running_trace_matches_brute_force_and_converges() {
    let wall = presets::reference_wall();
    let mut sc = presets::sinusoidal();
    sc.duration_hours = 120.0;
    sc.warmup_hours = 0.0;
    sc.initial = InitialState::Uniform(12.0);
    let s = simulate(&wall, &sc, 9).unwrap();
    let trace = running_u_trace(&s);
    assert!(trace.degenerate.is_empty());
    for &(k, est) in &trace.points {
        let q: f64 = s.samples()[..=k].iter().map(|x| x.heat_flux).sum();
        let dt: f64 = s.samples()[..=k].iter().map(|x| x.delta_t()).sum();
        assert!((est.u - q / dt).abs() < 1e-12 * (q / dt).abs());
    }
    let us: Vec<f64> = trace.points.iter().map(|(_, e)| e.u).collect();
    let quarter = us.len() / 4;
    let spread = |xs: &[f64]| {
        xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(spread(&us[us.len() - quarter..]) < spread(&us[..quarter]));
}

#[test]
fn stability_check_on_rc_series() {
    // solid brick core: slow enough that a late step is still settling at the end
    let mut wall = presets::reference_wall();
    wall.layer_capacitances[1] = 396_000.0;
    let mut sc = constant(96.0, 20.0, 0.0, InitialState::Steady);
    let steady = simulate(&wall, &sc, 0).unwrap();
    assert!(stability_check(&steady, TimeDelta::hours(24), 0.05).unwrap().stable);

    sc.exterior.step = Some(StepChange {
        at_hours: 80.0,
        magnitude_c: 8.0,
    });
    let stepped = simulate(&wall, &sc, 0).unwrap();
    let report = stability_check(&stepped, TimeDelta::hours(24), 0.05).unwrap();
    // direct recomputation of the two averages
    let ratio = |xs: &[hfm_core::Sample]| {
        xs.iter().map(|x| x.heat_flux).sum::<f64>() / xs.iter().map(|x| x.delta_t()).sum::<f64>()
    };
    let all = ratio(stepped.samples());
    let head = ratio(&stepped.samples()[..=72 * 6]);
    assert!((report.u_all - all).abs() < 1e-12);
    assert!((report.u_without_last_window - head).abs() < 1e-12);
    assert!(!report.stable, "{report:?}");
}
