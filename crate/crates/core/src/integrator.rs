// SPDX-License-Identifier: Apache-2.0

//! Reference solution of `dT/dt = G(t) T + S(t)` by classic fixed-step RK4.

use std::fmt;

use nalgebra::DVector;

use crate::model::{ModelError, ThermalNetwork};

/// Grid points per shortest driving period used when no step is given.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time window [{start}, {end}] must have positive length")]
    BadWindow { start: f64, end: f64 },
    #[error("initial state has {got} temperatures, network has {expected} bodies")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state became non-finite at t = {time}; reduce the time step")]
    Unstable { time: f64 },
    #[error("trajectories are not on the same time grid")]
    GridMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactRk4,
    Adiabatic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactRk4 => "exact-rk4",
            Method::Adiabatic => "adiabatic",
        })
    }
}

/// Temperatures of all bodies on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    method: Method,
    times: Vec<f64>,
    n_bodies: usize,
    values: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from one state per grid point.
    pub fn from_states(method: Method, times: Vec<f64>, states: &[Vec<f64>]) -> Result<Self, IntegrationError> {
        if states.len() != times.len() {
            return Err(IntegrationError::GridMismatch);
        }
        let n_bodies = states.first().map_or(0, Vec::len);
        if let Some(bad) = states.iter().find(|s| s.len() != n_bodies) {
            return Err(IntegrationError::DimensionMismatch {
                expected: n_bodies,
                got: bad.len(),
            });
        }
        Ok(Self {
            method,
            times,
            n_bodies,
            values: states.concat(),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_bodies(&self) -> usize {
        self.n_bodies
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_bodies..(k + 1) * self.n_bodies]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_bodies.max(1))
    }

    pub fn body_series(&self, body: usize) -> Vec<f64> {
        self.states().map(|s| s[body]).collect()
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// `t_start, t_start + h, ..., t_end` with `h <= dt` chosen so the window
/// is split into equal steps.
pub fn uniform_grid(t_start: f64, t_end: f64, dt: f64) -> Result<Vec<f64>, IntegrationError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(IntegrationError::BadStep(dt));
    }
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(IntegrationError::BadWindow {
            start: t_start,
            end: t_end,
        });
    }
    let span = t_end - t_start;
    let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=steps)
        .map(|k| {
            if k == steps {
                t_end
            } else {
                t_start + span * (k as f64 / steps as f64)
            }
        })
        .collect())
}

/// Shortest driving period over 2000, or the window over 2000 when nothing
/// is modulated.
pub fn default_time_step(network: &ThermalNetwork, t_start: f64, t_end: f64) -> f64 {
    network
        .shortest_period()
        .unwrap_or(t_end - t_start)
        / DEFAULT_STEPS_PER_PERIOD
}

/// Integrates from `initial` at `t_start` to `t_end` with step `<= dt`.
pub fn integrate_exact(
    network: &ThermalNetwork,
    initial: &[f64],
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, IntegrationError> {
    let times = uniform_grid(t_start, t_end, dt)?;
    integrate_on_grid(network, initial, &times)
}

/// RK4 through every point of `times`, one step per interval.
pub fn integrate_on_grid(
    network: &ThermalNetwork,
    initial: &[f64],
    times: &[f64],
) -> Result<Trajectory, IntegrationError> {
    let n = network.n_bodies();
    if initial.len() != n {
        return Err(IntegrationError::DimensionMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(IntegrationError::Unstable {
            time: times.first().copied().unwrap_or(0.0),
        });
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IntegrationError::BadWindow {
            start: times.first().copied().unwrap_or(f64::NAN),
            end: times.last().copied().unwrap_or(f64::NAN),
        });
    }

    let rhs = |t: f64, state: &DVector<f64>| -> Result<DVector<f64>, ModelError> {
        Ok(network.conductance_matrix(t)? * state + network.source_vector(t)?)
    };

    let mut values = Vec::with_capacity(times.len() * n);
    values.extend_from_slice(initial);
    let mut state = DVector::from_column_slice(initial);
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(t, &state)?;
        let k2 = rhs(t + 0.5 * h, &(&state + 0.5 * h * &k1))?;
        let k3 = rhs(t + 0.5 * h, &(&state + 0.5 * h * &k2))?;
        let k4 = rhs(t + h, &(&state + h * &k3))?;
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::Unstable { time: w[1] });
        }
        values.extend(state.iter());
    }
    Ok(Trajectory {
        method: Method::ExactRk4,
        times: times.to_vec(),
        n_bodies: n,
        values,
    })
}

/// Pointwise deviation between two trajectories on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub max_abs: Vec<f64>,
    pub rms: Vec<f64>,
    /// `|a - b|` per grid point and body.
    pub series: Vec<Vec<f64>>,
}

impl Comparison {
    /// Largest deviation over bodies and times.
    pub fn max_deviation(&self) -> f64 {
        self.max_abs.iter().copied().fold(0.0, f64::max)
    }
}

pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<Comparison, IntegrationError> {
    if a.times.len() != b.times.len()
        || a.n_bodies != b.n_bodies
        || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(IntegrationError::GridMismatch);
    }
    let n = a.n_bodies;
    let series: Vec<Vec<f64>> = a
        .states()
        .zip(b.states())
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).collect())
        .collect();
    let mut max_abs = vec![0.0f64; n];
    let mut sum_sq = vec![0.0; n];
    for row in &series {
        for i in 0..n {
            max_abs[i] = max_abs[i].max(row[i]);
            sum_sq[i] += row[i] * row[i];
        }
    }
    let count = series.len().max(1) as f64;
    Ok(Comparison {
        max_abs,
        rms: sum_sq.iter().map(|s| (s / count).sqrt()).collect(),
        series,
    })
}

/// Largest change at the common grid points when the step is halved.
pub fn step_doubling_validate(
    network: &ThermalNetwork,
    initial: &[f64],
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<f64, IntegrationError> {
    let coarse_grid = uniform_grid(t_start, t_end, dt)?;
    let fine_grid = refine(&coarse_grid);
    let coarse = integrate_on_grid(network, initial, &coarse_grid)?;
    let fine = integrate_on_grid(network, initial, &fine_grid)?;
    Ok(coarse
        .states()
        .zip(fine.states().step_by(2))
        .flat_map(|(c, f)| c.iter().zip(f).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max))
}

/// Observed order `log2(d(dt) / d(dt/2))` from successive step-halving
/// discrepancies.
pub fn convergence_order(
    network: &ThermalNetwork,
    initial: &[f64],
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<f64, IntegrationError> {
    let coarse = step_doubling_validate(network, initial, t_start, t_end, dt)?;
    let fine = step_doubling_validate(network, initial, t_start, t_end, 0.5 * dt)?;
    Ok((coarse / fine).log2())
}

/// Inserts the midpoint of every interval.
fn refine(times: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * times.len());
    for w in times.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(times.last());
    out
}
