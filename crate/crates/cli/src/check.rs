// SPDX-License-Identifier: Apache-2.0

//! The invariant suite behind `thermal-berry check`.

use serde::Serialize;
use thermal_berry::geometry::{self, ParamPath, Potential, SurfaceOptions};
use thermal_berry::integrator;
use thermal_berry::phases::AdiabaticSolution;
use thermal_berry::scenario::Scenario;
use thermal_berry::spectral::{self, Gauge};

use crate::commands::{eigen_phases, load_scenarios, period_window};
use crate::error::CliError;
use crate::output;
use crate::ScenarioArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub tolerance: f64,
    pub measured: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &'static str, tolerance: f64, measured: f64, detail: String) -> Self {
        Self {
            name,
            status: if measured <= tolerance { Status::Pass } else { Status::Fail },
            tolerance,
            measured: Some(measured),
            detail,
        }
    }

    fn skipped(name: &'static str, tolerance: f64, why: impl Into<String>) -> Self {
        Self {
            name,
            status: Status::Skipped,
            tolerance,
            measured: None,
            detail: why.into(),
        }
    }

    fn errored(name: &'static str, tolerance: f64, e: CliError) -> Self {
        Self {
            name,
            status: Status::Fail,
            tolerance,
            measured: None,
            detail: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct CheckReport {
    scenario: String,
    passed: bool,
    checks: Vec<CheckResult>,
}

/// `|a - b|` relative to the larger magnitude, or absolute once both sides
/// are below `floor`.
fn gap(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < floor {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

const LOOP_FLOOR: f64 = 1e-10;

type CheckFn = fn(&Scenario) -> Result<CheckResult, CliError>;

const CHECKS: [(&str, f64, CheckFn); 9] = [
    ("spectral_integrity", 1e-10, spectral_integrity),
    ("stokes", 1e-3, stokes),
    ("gauge_invariance", 1e-6, gauge_invariance),
    ("time_domain_vs_loop", 1e-4, time_domain_vs_loop),
    ("reparametrization", 1e-8, reparametrization),
    ("reciprocity_null", 1e-10, reciprocity_null),
    ("adiabatic_convergence", 0.0, adiabatic_convergence),
    ("step_doubling", 1e-6, step_doubling),
    ("gamma_d_monotone", 0.0, gamma_d_monotone),
];

/// Runs every check on `s`, each on its own thread.
pub fn run_suite(s: &Scenario) -> Vec<CheckResult> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = CHECKS
            .iter()
            .map(|&(name, tol, f)| {
                scope.spawn(move || f(s).unwrap_or_else(|e| CheckResult::errored(name, tol, e)))
            })
            .collect();
        handles
            .into_iter()
            .zip(CHECKS)
            .map(|(h, (name, tol, _))| {
                h.join()
                    .unwrap_or_else(|_| CheckResult::errored(name, tol, CliError::Numerical("check panicked".into())))
            })
            .collect()
    })
}

pub fn run(args: &ScenarioArgs) -> Result<(), CliError> {
    output::prepare_dir(&args.out)?;
    let mut failed = 0;
    for s in load_scenarios(args)? {
        let checks = run_suite(&s);
        for c in &checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skip",
            };
            let measured = c.measured.map_or("-".to_owned(), output::number);
            println!("{}: {status} {} measured {measured} tolerance {} ({})", s.name, c.name, c.tolerance, c.detail);
        }
        let n_failed = checks.iter().filter(|c| c.status == Status::Fail).count();
        failed += n_failed;
        let report = CheckReport {
            scenario: s.name.clone(),
            passed: n_failed == 0,
            checks,
        };
        output::write_json(&output::file(&args.out, &s.name, "check.json"), &report)?;
    }
    if failed > 0 {
        Err(CliError::ChecksFailed(failed))
    } else {
        Ok(())
    }
}

fn is_chart_network(s: &Scenario) -> bool {
    s.network.n_bodies() == 2 && s.network.capacities() == [1.0, 1.0]
}

fn has_period(s: &Scenario) -> bool {
    matches!(s.network.common_period(), Some(p) if p > 0.0)
}

fn spectral_integrity(s: &Scenario) -> Result<CheckResult, CliError> {
    let times = s.grid()?;
    let mut worst: f64 = 0.0;
    for &t in &times {
        let m = s.network.conductance_matrix(t).map_err(|e| CliError::Numerical(e.to_string()))?;
        let basis = spectral::eigendecompose(&m)?;
        worst = worst
            .max(basis.eigen_residual(&m) / m.norm().max(f64::MIN_POSITIVE))
            .max(basis.biorthogonality_residual());
    }
    Ok(CheckResult::measured(
        "spectral_integrity",
        1e-10,
        worst,
        format!("eigen and biorthogonality residuals over {} grid points", times.len()),
    ))
}

/// Per-branch loops of a two-body scenario over one period, or the reason
/// the loop checks do not apply.
fn chart_loops(s: &Scenario) -> Result<Result<Vec<ParamPath>, &'static str>, CliError> {
    if !is_chart_network(s) {
        return Ok(Err("the (x, y) chart needs a two-body network with unit capacities"));
    }
    if !has_period(s) {
        return Ok(Err("the driving has no common period"));
    }
    let (_, times) = period_window(s)?;
    Ok(Ok((0..2)
        .map(|b| ParamPath::two_body(&s.network, &times, b))
        .collect::<Result<_, _>>()?))
}

fn stokes(s: &Scenario) -> Result<CheckResult, CliError> {
    let paths = match chart_loops(s)? {
        Ok(p) => p,
        Err(why) => return Ok(CheckResult::skipped("stokes", 1e-3, why)),
    };
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (b, path) in paths.iter().enumerate() {
        let flux = geometry::flux(path, SurfaceOptions::default())?;
        for which in [Potential::Primary, Potential::Partner] {
            let line = geometry::circulation(path, which)?;
            worst = worst.max(gap(line, flux, LOOP_FLOOR));
            detail.push(format!("branch {} {which:?}: line {line:.6e} surface {flux:.6e}", b + 1));
        }
    }
    Ok(CheckResult::measured("stokes", 1e-3, worst, detail.join("; ")))
}

fn gauge_invariance(s: &Scenario) -> Result<CheckResult, CliError> {
    let paths = match chart_loops(s)? {
        Ok(p) => p,
        Err(why) => return Ok(CheckResult::skipped("gauge_invariance", 1e-6, why)),
    };
    let mut worst: f64 = 0.0;
    for path in &paths {
        let a = geometry::loop_integral(path, Potential::Primary)?;
        let a_partner = geometry::loop_integral(path, Potential::Partner)?;
        worst = worst.max(gap(a, a_partner, LOOP_FLOOR));
    }
    Ok(CheckResult::measured(
        "gauge_invariance",
        1e-6,
        worst,
        "loop integrals of A and A' per branch".into(),
    ))
}

fn time_domain_vs_loop(s: &Scenario) -> Result<CheckResult, CliError> {
    let paths = match chart_loops(s)? {
        Ok(p) => p,
        Err(why) => return Ok(CheckResult::skipped("time_domain_vs_loop", 1e-4, why)),
    };
    let (_, times) = period_window(s)?;
    let (_, phases) = eigen_phases(s, &times)?;
    let last = times.len() - 1;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (b, path) in paths.iter().enumerate() {
        let time_domain = phases.geometric(b)[last];
        let loop_value = geometry::loop_integral(path, Potential::Primary)?;
        worst = worst.max(gap(time_domain, loop_value, LOOP_FLOOR));
        detail.push(format!("branch {}: {time_domain:.6e} vs {loop_value:.6e}", b + 1));
    }
    Ok(CheckResult::measured("time_domain_vs_loop", 1e-4, worst, detail.join("; ")))
}

fn reparametrization(s: &Scenario) -> Result<CheckResult, CliError> {
    const TOL: f64 = 1e-8;
    if !has_period(s) {
        return Ok(CheckResult::skipped("reparametrization", TOL, "the driving has no common period"));
    }
    let (period, times) = period_window(s)?;
    let slow_network = s.network.time_scaled(2.0).map_err(|e| CliError::Numerical(e.to_string()))?;
    let slow = Scenario {
        t_start: 2.0 * s.t_start,
        t_end: 2.0 * (s.t_start + period),
        dt: Some(2.0 * (times[1] - times[0])),
        ..s.with_network(format!("{}-slow", s.name), slow_network)
    };
    let slow_times = slow.grid()?;
    let (_, fast_phases) = eigen_phases(s, &times)?;
    let (_, slow_phases) = eigen_phases(&slow, &slow_times)?;
    let (lf, ls) = (times.len() - 1, slow_times.len() - 1);
    let mut worst: f64 = 0.0;
    for b in 0..fast_phases.n_branches() {
        worst = worst
            .max(gap(fast_phases.geometric(b)[lf], slow_phases.geometric(b)[ls], LOOP_FLOOR))
            .max(gap(2.0 * fast_phases.dynamical(b)[lf], slow_phases.dynamical(b)[ls], LOOP_FLOOR));
    }
    Ok(CheckResult::measured(
        "reparametrization",
        TOL,
        worst,
        "gamma_g unchanged and gamma_d doubled when one period is traversed twice as slowly".into(),
    ))
}

fn reciprocity_null(s: &Scenario) -> Result<CheckResult, CliError> {
    const TOL: f64 = 1e-10;
    const POINTWISE: f64 = 1e-8;
    let reciprocal = Scenario {
        gauge: Gauge::UnitNorm,
        ..s.with_network(format!("{}-reciprocal", s.name), s.network.symmetrized())
    };
    let times = if has_period(&reciprocal) {
        period_window(&reciprocal)?.1
    } else {
        reciprocal.grid()?
    };
    let (_, phases) = eigen_phases(&reciprocal, &times)?;
    let last = times.len() - 1;
    let closed = (0..phases.n_branches())
        .map(|b| phases.geometric(b)[last].abs())
        .fold(0.0, f64::max);
    let pointwise = (0..phases.n_branches())
        .flat_map(|b| phases.geometric(b).iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let equal_capacities = s.network.capacities().windows(2).all(|w| w[0] == w[1]);
    let mut result = CheckResult::measured(
        "reciprocity_null",
        TOL,
        closed,
        format!("symmetrized network, unit-norm gauge; max pointwise |gamma_g| {pointwise:.3e}"),
    );
    if equal_capacities && pointwise > POINTWISE {
        result.status = Status::Fail;
        result.detail.push_str(&format!(" exceeds {POINTWISE:e}"));
    }
    Ok(result)
}

fn adiabatic_convergence(s: &Scenario) -> Result<CheckResult, CliError> {
    let deviation = |scenario: &Scenario| -> Result<f64, CliError> {
        let times = scenario.grid()?;
        let exact = integrator::integrate_on_grid(&scenario.network, &scenario.initial_temperatures, &times)?;
        let adiabatic =
            AdiabaticSolution::solve(&scenario.network, &scenario.initial_temperatures, &times, scenario.gauge)?
                .trajectory();
        Ok(integrator::compare(&exact, &adiabatic)?.max_deviation())
    };
    let slow_network = s.network.time_scaled(5.0).map_err(|e| CliError::Numerical(e.to_string()))?;
    let slow = s.with_network(format!("{}-slow", s.name), slow_network);
    let (base, slowed) = (deviation(s)?, deviation(&slow)?);
    // measured: growth of the deviation when the driving is slowed 5x
    let growth = slowed - base;
    Ok(CheckResult::measured(
        "adiabatic_convergence",
        1e-9 * base.max(1.0),
        growth,
        format!("max |adiabatic - exact| {base:.4e} K, with 5x slower driving {slowed:.4e} K"),
    ))
}

fn step_doubling(s: &Scenario) -> Result<CheckResult, CliError> {
    let change = integrator::step_doubling_validate(
        &s.network,
        &s.initial_temperatures,
        s.t_start,
        s.t_end,
        s.time_step(),
    )?;
    Ok(CheckResult::measured(
        "step_doubling",
        1e-6,
        change,
        format!("largest change in K when dt = {} is halved", s.time_step()),
    ))
}

fn gamma_d_monotone(s: &Scenario) -> Result<CheckResult, CliError> {
    let times = s.grid()?;
    let (_, phases) = eigen_phases(s, &times)?;
    let rise = (0..phases.n_branches())
        .flat_map(|b| phases.dynamical(b).windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckResult::measured(
        "gamma_d_monotone",
        0.0,
        rise.max(0.0),
        format!("largest step of cumulative gamma_d {rise:.3e}"),
    ))
}
