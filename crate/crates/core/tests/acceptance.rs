// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits non-zero if any failed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use thermal_berry::geometry::{self, ParamPath, Potential, SurfaceOptions};
use thermal_berry::integrator::{self, Trajectory};
use thermal_berry::model::{Conductance, ThermalNetwork, TwoBodyDriving, TwoBodyParams};
use thermal_berry::phases::AdiabaticSolution;
use thermal_berry::scenario::{self, fig2_params, fig3_params, Scenario, PRESET_NAMES};
use thermal_berry::spectral::{self, Gauge};

type Outcome = Result<(bool, String), String>;

fn scenario_of(name: &str) -> Scenario {
    scenario::preset(name).expect("bundled preset").remove(0)
}

fn all_scenarios() -> Vec<Scenario> {
    PRESET_NAMES
        .iter()
        .flat_map(|name| scenario::preset(name).expect("bundled preset"))
        .collect()
}

fn two_body(params: &TwoBodyParams) -> ThermalNetwork {
    TwoBodyDriving::from_params(params)
        .and_then(|d| d.network(300.0))
        .expect("valid driving")
}

fn exact_and_adiabatic(
    network: &ThermalNetwork,
    initial: &[f64],
    times: &[f64],
    gauge: Gauge,
) -> Result<(Trajectory, Trajectory), String> {
    let exact = integrator::integrate_on_grid(network, initial, times).map_err(|e| e.to_string())?;
    let adiabatic = AdiabaticSolution::solve(network, initial, times, gauge)
        .map_err(|e| e.to_string())?
        .trajectory();
    Ok((exact, adiabatic))
}

/// One driving period sampled with the default step.
fn period_grid(network: &ThermalNetwork) -> Vec<f64> {
    let period = network.common_period().expect("commensurate driving");
    let dt = integrator::default_time_step(network, 0.0, period);
    integrator::uniform_grid(0.0, period, dt).expect("grid")
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn adiabatic_fidelity() -> Outcome {
    let s = scenario_of("fig2a");
    let start = Instant::now();
    let times = s.grid().map_err(|e| e.to_string())?;
    let (exact, adiabatic) = exact_and_adiabatic(&s.network, &s.initial_temperatures, &times, s.gauge)?;
    let elapsed = start.elapsed().as_secs_f64();
    let cmp = integrator::compare(&exact, &adiabatic).map_err(|e| e.to_string())?;
    let (k, dev) = cmp
        .series
        .iter()
        .map(|row| row[0])
        .enumerate()
        .fold((0, 0.0), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc });
    Ok((
        dev < 2.0 && elapsed < 5.0,
        format!(
            "max |T1_adiabatic - T1_rk4| = {dev:.4} K at t = {:.3} s (limit 2 K), runtime {elapsed:.2} s (limit 5 s)",
            times[k]
        ),
    ))
}

fn breakdown_ordering() -> Outcome {
    let mut deviations = Vec::new();
    for factor in [1.0, 5.0, 10.0, 50.0] {
        let net = two_body(&fig2_params(factor));
        let dt = integrator::default_time_step(&net, 0.0, 10.0);
        let times = integrator::uniform_grid(0.0, 10.0, dt).map_err(|e| e.to_string())?;
        let (exact, adiabatic) = exact_and_adiabatic(&net, &[400.0, 300.0], &times, Gauge::FirstComponent)?;
        deviations.push(integrator::compare(&exact, &adiabatic).map_err(|e| e.to_string())?.max_deviation());
    }
    let monotone = deviations.windows(2).all(|w| w[0] > w[1]);
    Ok((
        monotone && deviations[0] > deviations[2],
        format!("max deviation for Lambda = 1, 5, 10, 50 tau: {deviations:.4?} K"),
    ))
}

fn reciprocity_null() -> Outcome {
    let s = scenario_of("reciprocal");
    let times = period_grid(&s.network);
    let sol = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, Gauge::UnitNorm)
        .map_err(|e| e.to_string())?;
    let mut closed: f64 = 0.0;
    let mut pointwise: f64 = 0.0;
    for branch in 0..2 {
        let gg = sol.phases.geometric(branch);
        closed = closed.max(gg[gg.len() - 1].abs());
        pointwise = pointwise.max(gg.iter().fold(0.0, |m, v| m.max(v.abs())));
        let path = ParamPath::two_body(&s.network, &times, branch).map_err(|e| e.to_string())?;
        for which in [Potential::Primary, Potential::Partner] {
            closed = closed.max(geometry::loop_integral(&path, which).map_err(|e| e.to_string())?.abs());
        }
    }
    Ok((
        closed < 1e-10 && pointwise < 1e-8,
        format!("closed-loop |gamma_g| = {closed:.3e} (limit 1e-10), max_t |gamma_g(t)| = {pointwise:.3e} (limit 1e-8)"),
    ))
}

fn in_phase_null() -> Outcome {
    let mut worst: f64 = 0.0;
    for theta in [0.0, PI] {
        for factor in [1.0, 10.0] {
            let mut p = fig2_params(factor);
            p.bath_1_amplitude = 0.0;
            p.bath_2_amplitude = 0.0;
            p.phase_shift = theta;
            let net = two_body(&p);
            let times = period_grid(&net);
            for gauge in [Gauge::UnitNorm, Gauge::FirstComponent] {
                let sol = AdiabaticSolution::solve(&net, &[400.0, 300.0], &times, gauge).map_err(|e| e.to_string())?;
                for branch in 0..2 {
                    let gg = sol.phases.geometric(branch);
                    worst = worst.max(gg[gg.len() - 1].abs());
                }
            }
            for branch in 0..2 {
                let path = ParamPath::two_body(&net, &times, branch).map_err(|e| e.to_string())?;
                worst = worst.max(geometry::loop_integral(&path, Potential::Primary).map_err(|e| e.to_string())?.abs());
            }
        }
    }
    Ok((worst < 1e-8, format!("largest closed-loop |gamma_g| over theta in {{0, pi}} = {worst:.3e} (limit 1e-8)")))
}

fn stokes_equivalence() -> Outcome {
    let s = scenario_of("fig2b");
    let times = period_grid(&s.network);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for branch in 0..2 {
        let path = ParamPath::two_body(&s.network, &times, branch).map_err(|e| e.to_string())?;
        let surface = geometry::flux(&path, SurfaceOptions::default()).map_err(|e| e.to_string())?;
        for which in [Potential::Primary, Potential::Partner] {
            let line = geometry::circulation(&path, which).map_err(|e| e.to_string())?;
            let err = (line - surface).abs() / line.abs();
            worst = worst.max(err);
            detail.push(format!("branch {} {:?}: line {line:.8e} surface {surface:.8e}", branch + 1, which));
        }
    }
    Ok((worst < 1e-3, format!("worst relative gap {worst:.3e} (limit 1e-3); {}", detail.join("; "))))
}

fn time_domain_vs_loop() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for name in ["fig2b", "fig2a"] {
        let s = scenario_of(name);
        let times = period_grid(&s.network);
        let sol = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, s.gauge)
            .map_err(|e| e.to_string())?;
        for branch in 0..2 {
            let gg = sol.phases.geometric(branch);
            let time_domain = gg[gg.len() - 1];
            let path = ParamPath::two_body(&s.network, &times, branch).map_err(|e| e.to_string())?;
            let loop_value = geometry::loop_integral(&path, Potential::Primary).map_err(|e| e.to_string())?;
            worst = worst.max(relative(time_domain, loop_value));
            detail.push(format!("{name} branch {}: {time_domain:.8e} vs {loop_value:.8e}", branch + 1));
        }
    }
    Ok((worst < 1e-4, format!("worst relative gap {worst:.3e} (limit 1e-4); {}", detail.join("; "))))
}

fn reparametrization() -> Outcome {
    let base = fig2_params(1.0);
    let mut slow = base;
    slow.coupling_period *= 2.0;
    slow.bath_period *= 2.0;
    let phases_at_end = |p: &TwoBodyParams| -> Result<Vec<(f64, f64)>, String> {
        let net = two_body(p);
        let times = period_grid(&net);
        let sol = AdiabaticSolution::solve(&net, &[400.0, 300.0], &times, Gauge::FirstComponent)
            .map_err(|e| e.to_string())?;
        Ok((0..2)
            .map(|b| {
                let (gd, gg) = (sol.phases.dynamical(b), sol.phases.geometric(b));
                (gd[gd.len() - 1], gg[gg.len() - 1])
            })
            .collect())
    };
    let (fast, slow) = (phases_at_end(&base)?, phases_at_end(&slow)?);
    let mut geometric: f64 = 0.0;
    let mut dynamical: f64 = 0.0;
    for ((gd1, gg1), (gd2, gg2)) in fast.iter().zip(&slow) {
        geometric = geometric.max(relative(*gg1, *gg2));
        dynamical = dynamical.max(relative(2.0 * gd1, *gd2));
    }
    Ok((
        geometric < 1e-8 && dynamical < 1e-8,
        format!("relative change of gamma_g {geometric:.3e}, of gamma_d / 2 {dynamical:.3e} (limits 1e-8)"),
    ))
}

fn spectral_integrity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut eigen_res, mut bi_res, mut route_gap, mut zero_mode): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let mut net = ThermalNetwork::new(2, 300.0).map_err(|e| e.to_string())?;
        net.set_pair(0, 1, Conductance::constant(rng.gen_range(0.01..2.0))).map_err(|e| e.to_string())?;
        net.set_pair(1, 0, Conductance::constant(rng.gen_range(0.01..2.0))).map_err(|e| e.to_string())?;
        net.set_bath(0, Conductance::constant(rng.gen_range(0.01..2.0))).map_err(|e| e.to_string())?;
        net.set_bath(1, Conductance::constant(rng.gen_range(0.01..2.0))).map_err(|e| e.to_string())?;
        let m = net.conductance_matrix(0.0).map_err(|e| e.to_string())?;
        let analytic = spectral::two_body_eigensystem(&m).map_err(|e| e.to_string())?;
        let numeric = spectral::numeric_eigensystem(&m).map_err(|e| e.to_string())?;
        for basis in [&analytic, &numeric] {
            eigen_res = eigen_res.max(basis.eigen_residual(&m));
            bi_res = bi_res.max(basis.biorthogonality_residual());
        }
        for i in 0..2 {
            route_gap = route_gap.max((analytic.eigenvalue(i) - numeric.eigenvalue(i)).abs());
            route_gap = route_gap.max((analytic.right(i) - numeric.right(i)).amax());
            route_gap = route_gap.max((analytic.left(i) - numeric.left(i)).amax());
        }

        let aug = net.augmented_matrix(0.0).map_err(|e| e.to_string())?;
        let basis = spectral::numeric_eigensystem(&aug).map_err(|e| e.to_string())?;
        let zero = (0..3)
            .min_by(|&a, &b| basis.eigenvalue(a).abs().total_cmp(&basis.eigenvalue(b).abs()))
            .expect("three branches");
        let ones = DVector::from_element(3, 1.0 / 3f64.sqrt());
        let phi = basis.right(zero).normalize();
        zero_mode = zero_mode
            .max(basis.eigenvalue(zero).abs())
            .max((phi - ones).amax())
            .max((&aug * DVector::from_element(3, 1.0)).amax());
    }
    let ok = eigen_res < 1e-10 && bi_res < 1e-10 && route_gap < 1e-9 && zero_mode < 1e-10;
    Ok((
        ok,
        format!(
            "1000 systems: eigen residual {eigen_res:.2e}, biorthogonality {bi_res:.2e} (limits 1e-10); analytic vs numeric {route_gap:.2e} (limit 1e-9); zero mode {zero_mode:.2e}"
        ),
    ))
}

fn relaxation() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for s in all_scenarios() {
        // effective slowest rate: mean of the slowest eigenvalue over one period
        let sample = period_grid(&s.network);
        let slowest: Vec<f64> = sample
            .iter()
            .map(|&t| {
                let m = s.network.conductance_matrix(t).map_err(|e| e.to_string())?;
                Ok(spectral::eigendecompose(&m).map_err(|e| e.to_string())?.eigenvalue(0))
            })
            .collect::<Result<_, String>>()?;
        let rate = slowest.iter().sum::<f64>() / slowest.len() as f64;
        let horizon = 20.0 / rate.abs();
        let dt = s.time_step().max(0.01_f64.min(horizon / 2000.0));
        let traj = integrator::integrate_exact(&s.network, &s.initial_temperatures, 0.0, horizon, dt)
            .map_err(|e| e.to_string())?;
        let tb = s.network.bath_temperature();
        let residual = traj.last_state().iter().fold(0.0_f64, |m, t| m.max((t - tb).abs()));

        let times = s.grid().map_err(|e| e.to_string())?;
        let sol = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, s.gauge)
            .map_err(|e| e.to_string())?;
        let monotone = (0..sol.phases.n_branches())
            .all(|b| sol.phases.dynamical(b).windows(2).all(|w| w[1] <= w[0]));
        ok &= residual < 0.1 && monotone;
        detail.push(format!("{}: |T - Tb| = {residual:.2e} K after {horizon:.1} s, gamma_d non-increasing = {monotone}", s.name));
    }
    Ok((ok, detail.join("; ")))
}

fn weak_coupling_regime() -> Outcome {
    let s = scenario_of("fig3");
    let p = fig3_params();
    let times = s.grid().map_err(|e| e.to_string())?;
    let sol = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, s.gauge)
        .map_err(|e| e.to_string())?;
    let first_cycle = times.iter().take_while(|&&t| t <= p.bath_period + 1e-12).count();
    let at_lambda = times
        .iter()
        .position(|&t| (t - p.coupling_period).abs() < 1e-9)
        .ok_or("grid misses t = Lambda")?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut early = false;
    let mut late = true;
    let mut detail = Vec::new();
    for b in 0..2 {
        let (gd, gg) = (sol.phases.dynamical(b), sol.phases.geometric(b));
        let (mg, md) = (max_abs(&gg[..first_cycle]), max_abs(&gd[..first_cycle]));
        early |= mg >= md;
        late &= gg[at_lambda].abs() < gd[at_lambda].abs();
        detail.push(format!(
            "branch {}: first cycle max|gamma_g| {mg:.4e} vs max|gamma_d| {md:.4e}; at t = Lambda |gamma_g| {:.3e} vs |gamma_d| {:.3e}",
            b + 1,
            gg[at_lambda].abs(),
            gd[at_lambda].abs()
        ));
    }
    Ok((early && late, detail.join("; ")))
}

fn rk_self_consistency() -> Outcome {
    let mut halving: f64 = 0.0;
    for s in all_scenarios() {
        let d = integrator::step_doubling_validate(&s.network, &s.initial_temperatures, s.t_start, s.t_end, s.time_step())
            .map_err(|e| e.to_string())?;
        halving = halving.max(d);
    }
    let mut orders = Vec::new();
    for name in ["fig2a", "fig2b"] {
        let s = scenario_of(name);
        orders.push(
            integrator::convergence_order(&s.network, &s.initial_temperatures, s.t_start, s.t_end, 0.05)
                .map_err(|e| e.to_string())?,
        );
    }
    let ok = halving < 1e-6 && orders.iter().all(|o| (o - 4.0).abs() <= 0.3);
    Ok((
        ok,
        format!("largest step-halving change {halving:.3e} K (limit 1e-6); observed order {orders:.3?} (4.0 +- 0.3)"),
    ))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("1 adiabatic fidelity", adiabatic_fidelity),
        ("2 adiabatic breakdown ordering", breakdown_ordering),
        ("3 reciprocity null", reciprocity_null),
        ("4 in-phase null", in_phase_null),
        ("5 Stokes equivalence", stokes_equivalence),
        ("6 time-domain vs loop integral", time_domain_vs_loop),
        ("7 reparametrization invariance", reparametrization),
        ("8 spectral integrity", spectral_integrity),
        ("9 relaxation", relaxation),
        ("10 weak-coupling regime", weak_coupling_regime),
        ("11 RK4 self-consistency", rk_self_consistency),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!("{} criterion {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failures} failed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
