// SPDX-License-Identifier: Apache-2.0

use approx::assert_relative_eq;

use thermal_berry::geometry::{self, ParamPath, Potential, SurfaceOptions};
use thermal_berry::integrator;
use thermal_berry::phases::{self, AdiabaticSolution, PhaseTrajectory};
use thermal_berry::scenario::{self, fig2_params};
use thermal_berry::spectral::{self, Gauge};

fn one_period(name: &str) -> (scenario::Scenario, Vec<f64>) {
    let s = scenario::preset(name).unwrap().remove(0);
    let period = s.network.common_period().unwrap();
    let times = integrator::uniform_grid(0.0, period, s.time_step()).unwrap();
    (s, times)
}

#[test]
fn numeric_geometric_phase_matches_closed_form() {
    let (s, times) = one_period("fig2a");
    let driving = s.two_body_driving().unwrap();
    let eigen = spectral::track_branches(&times, Gauge::FirstComponent, |t| s.network.conductance_matrix(t)).unwrap();
    let numeric = PhaseTrajectory::compute(&eigen).unwrap();
    for branch in 0..2 {
        let closed = phases::two_body_closed_form_geometric_phase(&driving, &times, branch).unwrap();
        let scale = closed.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let worst = closed
            .iter()
            .zip(numeric.geometric(branch))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6 * scale, "branch {}: {:e}", branch + 1, worst / scale);
    }
}

#[test]
fn first_component_gauge_follows_the_chart() {
    let (s, times) = one_period("fig2b");
    let eigen = spectral::track_branches(&times, Gauge::FirstComponent, |t| s.network.conductance_matrix(t)).unwrap();
    for branch in 0..2 {
        let path = ParamPath::two_body(&s.network, &times, branch).unwrap();
        for (k, p) in path.points().iter().enumerate() {
            let phi = eigen.right(branch, k);
            assert_eq!(phi[0], 1.0);
            assert_relative_eq!(phi[1], p[0], max_relative = 1e-10);
            let beta = 1.0 + p[0] * p[0] * p[1];
            assert_relative_eq!(eigen.left(branch, k)[0], 1.0 / beta, max_relative = 1e-10);
        }
    }
}

#[test]
fn loop_values_are_gauge_independent() {
    let (s, times) = one_period("fig2b");
    let end = times.len() - 1;
    let last = |gauge| {
        let eigen = spectral::track_branches(&times, gauge, |t| s.network.conductance_matrix(t)).unwrap();
        let p = PhaseTrajectory::compute(&eigen).unwrap();
        [p.geometric(0)[end], p.geometric(1)[end]]
    };
    let (unit, first) = (last(Gauge::UnitNorm), last(Gauge::FirstComponent));
    for b in 0..2 {
        assert!((unit[b] - first[b]).abs() < 1e-12, "{unit:?} vs {first:?}");
    }
}

#[test]
fn loops_sit_on_either_side_of_the_y_axis() {
    let (s, times) = one_period("fig2b");
    let p1 = ParamPath::two_body(&s.network, &times, 0).unwrap();
    let p2 = ParamPath::two_body(&s.network, &times, 1).unwrap();
    assert!(p1.is_closed() && p2.is_closed());
    assert!(p1.points().iter().all(|p| p[0] > 0.0 && p[1] > 0.0));
    assert!(p2.points().iter().all(|p| p[0] < 0.0));
    // opposite curvature signs, opposite phases
    let g1 = geometry::loop_integral(&p1, Potential::Primary).unwrap();
    let g2 = geometry::loop_integral(&p2, Potential::Primary).unwrap();
    assert!(g1 < 0.0 && g2 > 0.0);
    assert_relative_eq!(g1, -g2, max_relative = 1e-3);
    assert_relative_eq!(g1, geometry::surface_integral(&p1, SurfaceOptions::default()).unwrap(), max_relative = 1e-6);
}

#[test]
fn slower_coupling_keeps_adiabatic_state_closer() {
    let deviation = |factor: f64| {
        let net = thermal_berry::model::TwoBodyDriving::from_params(&fig2_params(factor))
            .unwrap()
            .network(300.0)
            .unwrap();
        let times = integrator::uniform_grid(0.0, 10.0, 0.0005).unwrap();
        let exact = integrator::integrate_on_grid(&net, &[400.0, 300.0], &times).unwrap();
        let adiabatic = AdiabaticSolution::solve(&net, &[400.0, 300.0], &times, Gauge::UnitNorm)
            .unwrap()
            .trajectory();
        integrator::compare(&exact, &adiabatic).unwrap().max_deviation()
    };
    assert!(deviation(1.0) > deviation(10.0));
}

#[test]
fn adiabatic_state_starts_at_initial_temperatures() {
    let (s, times) = one_period("fig2a");
    let sol = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, s.gauge).unwrap();
    let start = sol.state(0);
    assert_relative_eq!(start[0], 400.0, max_relative = 1e-12);
    assert!((start[1] - 300.0).abs() < 1e-10);
}
