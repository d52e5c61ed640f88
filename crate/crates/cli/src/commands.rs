// SPDX-License-Identifier: Apache-2.0

use std::fs;

use serde::Serialize;
use thermal_berry::geometry::{self, GridSpec, ParamPath, Potential, SurfaceOptions};
use thermal_berry::integrator::{self, Trajectory};
use thermal_berry::phases::{AdiabaticSolution, PhaseTrajectory};
use thermal_berry::scenario::{self, Scenario};
use thermal_berry::spectral::{self, EigenTrajectory};

use crate::error::CliError;
use crate::output::{self, number, Csv};
use crate::{FieldmapArgs, PhaseArgs, ScenarioArgs};

/// Scenarios selected by `--config` or `--preset`, with flag overrides.
pub fn load_scenarios(args: &ScenarioArgs) -> Result<Vec<Scenario>, CliError> {
    let mut scenarios = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let parsed = scenario::parse_config(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            vec![parsed]
        }
        (None, Some(name)) => scenario::preset(name)?,
        (None, None) => return Err(CliError::Config("pass --config PATH or --preset NAME".into())),
        (Some(_), Some(_)) => return Err(CliError::Config("--config and --preset are exclusive".into())),
    };
    for s in &mut scenarios {
        if let Some(dt) = args.dt {
            s.dt = Some(dt);
        }
        if let Some(gauge) = args.gauge {
            s.gauge = gauge;
        }
        if let Some(t_end) = args.t_end {
            s.t_end = t_end;
        }
        s.validate()?;
    }
    Ok(scenarios)
}

pub fn eigen_phases(s: &Scenario, times: &[f64]) -> Result<(EigenTrajectory, PhaseTrajectory), CliError> {
    let eigen = spectral::track_branches(times, s.gauge, |t| s.network.conductance_matrix(t))?;
    let phases = PhaseTrajectory::compute(&eigen)?;
    Ok((eigen, phases))
}

/// One full driving period starting at the scenario's start time.
pub fn period_window(s: &Scenario) -> Result<(f64, Vec<f64>), CliError> {
    let period = match s.network.common_period() {
        Some(p) if p > 0.0 => p,
        _ => {
            return Err(CliError::Config(format!(
                "scenario `{}` has no common driving period, so it traces no closed loop",
                s.name
            )))
        }
    };
    let dt = s.time_step().min(period / 100.0);
    Ok((period, integrator::uniform_grid(s.t_start, s.t_start + period, dt)?))
}

fn trajectory_csv(traj: &Trajectory) -> Csv {
    let mut header = vec!["t".to_owned()];
    header.extend((1..=traj.n_bodies()).map(|i| format!("T_{i}")));
    header.push("method".into());
    let mut csv = Csv::new(&header);
    let method = traj.method().to_string();
    for (k, &t) in traj.times().iter().enumerate() {
        let mut row = vec![number(t)];
        row.extend(traj.state(k).iter().map(|&v| number(v)));
        row.push(method.clone());
        csv.row(&row);
    }
    csv
}

#[derive(Serialize)]
struct SimulateReport {
    scenario: String,
    gauge: String,
    t_start: f64,
    t_end: f64,
    dt: f64,
    steps: usize,
    max_abs_deviation: Vec<f64>,
    rms_deviation: Vec<f64>,
    max_deviation: f64,
    final_exact: Vec<f64>,
    final_adiabatic: Vec<f64>,
}

pub fn simulate(args: &ScenarioArgs) -> Result<(), CliError> {
    output::prepare_dir(&args.out)?;
    for s in load_scenarios(args)? {
        let times = s.grid()?;
        let exact = integrator::integrate_on_grid(&s.network, &s.initial_temperatures, &times)?;
        trajectory_csv(&exact).write(&output::file(&args.out, &s.name, "exact.csv"))?;
        let adiabatic = AdiabaticSolution::solve(&s.network, &s.initial_temperatures, &times, s.gauge)?.trajectory();
        trajectory_csv(&adiabatic).write(&output::file(&args.out, &s.name, "adiabatic.csv"))?;
        let cmp = integrator::compare(&exact, &adiabatic)?;
        let report = SimulateReport {
            scenario: s.name.clone(),
            gauge: s.gauge.to_string(),
            t_start: s.t_start,
            t_end: s.t_end,
            dt: times[1] - times[0],
            steps: times.len() - 1,
            max_deviation: cmp.max_deviation(),
            max_abs_deviation: cmp.max_abs,
            rms_deviation: cmp.rms,
            final_exact: exact.last_state().to_vec(),
            final_adiabatic: adiabatic.last_state().to_vec(),
        };
        output::write_json(&output::file(&args.out, &s.name, "report.json"), &report)?;
    }
    Ok(())
}

pub fn phases(args: &PhaseArgs) -> Result<(), CliError> {
    let out = &args.scenario.out;
    output::prepare_dir(out)?;
    for s in load_scenarios(&args.scenario)? {
        let times = s.grid()?;
        let (eigen, phases) = eigen_phases(&s, &times)?;
        let branches = args.branch.select(eigen.dim())?;

        let mut csv = Csv::new(&["t", "branch", "gamma_d", "gamma_g"]);
        for &b in &branches {
            for (k, &t) in times.iter().enumerate() {
                csv.row(&[
                    number(t),
                    (b + 1).to_string(),
                    number(phases.dynamical(b)[k]),
                    number(phases.geometric(b)[k]),
                ]);
            }
        }
        csv.write(&output::file(out, &s.name, "phases.csv"))?;

        let n = eigen.dim();
        let mut header = vec!["t".to_owned(), "i".to_owned(), "lambda_i".to_owned()];
        header.extend((1..=n).map(|c| format!("phi_i_{c}")));
        header.extend((1..=n).map(|c| format!("psi_i_{c}")));
        let mut csv = Csv::new(&header);
        for &b in &branches {
            for (k, &t) in times.iter().enumerate() {
                let mut row = vec![number(t), (b + 1).to_string(), number(eigen.eigenvalue(b, k))];
                row.extend(eigen.right(b, k).iter().map(|&v| number(v)));
                row.extend(eigen.left(b, k).iter().map(|&v| number(v)));
                csv.row(&row);
            }
        }
        csv.write(&output::file(out, &s.name, "eigen.csv"))?;
    }
    Ok(())
}

fn fieldmap_csv(spec: &GridSpec) -> Result<Csv, CliError> {
    let map = geometry::field_map(spec)?;
    let mut csv = Csv::new(&["x", "y", "B_z"]);
    for (x, y, b) in map.rows() {
        csv.numbers([x, y, b]);
    }
    Ok(csv)
}

pub fn fieldmap(args: &FieldmapArgs) -> Result<(), CliError> {
    let out = &args.scenario.out;
    output::prepare_dir(out)?;
    let explicit = [args.x_min, args.x_max, args.y_min, args.y_max];
    let has_scenario = args.scenario.config.is_some() || args.scenario.preset.is_some();
    if !has_scenario {
        let [Some(x_min), Some(x_max), Some(y_min), Some(y_max)] = explicit else {
            return Err(CliError::Config(
                "without a scenario, pass all of --x-min --x-max --y-min --y-max".into(),
            ));
        };
        let spec = GridSpec {
            x_min,
            x_max,
            nx: args.nx,
            y_min,
            y_max,
            ny: args.ny,
        };
        return fieldmap_csv(&spec)?.write(&out.join("fieldmap.csv"));
    }
    for s in load_scenarios(&args.scenario)? {
        let (_, times) = period_window(&s)?;
        for b in args.branch.select(s.network.n_bodies())? {
            // the field is the same function for every branch; each map
            // covers the region swept by that branch's loop
            let path = ParamPath::two_body(&s.network, &times, b)?;
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in path.points() {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
            for d in 0..2 {
                let pad = 0.05 * (hi[d] - lo[d]).max(1e-6);
                lo[d] -= pad;
                hi[d] += pad;
            }
            let spec = GridSpec {
                x_min: args.x_min.unwrap_or(lo[0]),
                x_max: args.x_max.unwrap_or(hi[0]),
                nx: args.nx,
                y_min: args.y_min.unwrap_or(lo[1]),
                y_max: args.y_max.unwrap_or(hi[1]),
                ny: args.ny,
            };
            fieldmap_csv(&spec)?.write(&output::file(out, &s.name, &format!("fieldmap_branch{}.csv", b + 1)))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
pub struct LoopSummary {
    pub branch: usize,
    pub period: f64,
    pub closing_gap: f64,
    /// Line integral of `A` around the loop.
    pub circulation: f64,
    /// Winding-weighted surface integral of `B_z`.
    pub flux: f64,
    /// Geometric phase from the loop integral of `A`.
    pub gamma_g_loop: f64,
    /// Same from the partner potential `A'`.
    pub gamma_g_loop_partner: f64,
    /// Same from the enclosed curvature.
    pub gamma_g_surface: f64,
    /// Same accumulated in the time domain over the period.
    pub gamma_g_time_domain: f64,
    pub gamma_d_period: f64,
}

pub fn loop_summary(s: &Scenario, branch: usize) -> Result<(LoopSummary, ParamPath), CliError> {
    let (period, times) = period_window(s)?;
    let path = ParamPath::two_body(&s.network, &times, branch)?;
    let (_, phases) = eigen_phases(s, &times)?;
    let last = times.len() - 1;
    let circulation = geometry::circulation(&path, Potential::Primary)?;
    let flux = geometry::flux(&path, SurfaceOptions::default())?;
    let summary = LoopSummary {
        branch: branch + 1,
        period,
        closing_gap: path.closing_gap(),
        circulation,
        flux,
        gamma_g_loop: geometry::loop_integral(&path, Potential::Primary)?,
        gamma_g_loop_partner: geometry::loop_integral(&path, Potential::Partner)?,
        gamma_g_surface: -flux,
        gamma_g_time_domain: phases.geometric(branch)[last],
        gamma_d_period: phases.dynamical(branch)[last],
    };
    Ok((summary, path))
}

#[derive(Serialize)]
struct LoopReport {
    scenario: String,
    branches: Vec<LoopSummary>,
}

pub fn loops(args: &PhaseArgs) -> Result<(), CliError> {
    let out = &args.scenario.out;
    output::prepare_dir(out)?;
    for s in load_scenarios(&args.scenario)? {
        let mut report = LoopReport {
            scenario: s.name.clone(),
            branches: Vec::new(),
        };
        for b in args.branch.select(s.network.n_bodies())? {
            let (summary, path) = loop_summary(&s, b)?;
            let mut csv = Csv::new(&["t", "x", "y"]);
            for (t, p) in path.times().iter().zip(path.points()) {
                csv.numbers([*t, p[0], p[1]]);
            }
            csv.write(&output::file(out, &s.name, &format!("path_branch{}.csv", b + 1)))?;
            report.branches.push(summary);
        }
        output::write_json(&output::file(out, &s.name, "loop.json"), &report)?;
    }
    Ok(())
}
