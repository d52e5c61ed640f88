// SPDX-License-Identifier: Apache-2.0

//! Linearized thermal network and its periodic driving.
//!
//! Conductances are raw rates; the matrix builders divide row `i` by the
//! heat capacity `C_i` (all 1 in normalized units). `pair(i, j)` is the
//! conductance through which body `i` receives power from body `j`, so the
//! linearized balance reads
//! `C_i dT_i/dt = sum_j G_ij (T_j - T_i) + G_ib (T_b - T_i)`.
//! Nothing forces `G_ij == G_ji`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

/// Error raised while building or evaluating a [`ThermalNetwork`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("non-finite {what} conductance at t = {time}")]
    NonFinite { what: String, time: f64 },
    #[error("negative {what} conductance {value} at t = {time}")]
    Negative { what: String, value: f64, time: f64 },
    #[error("time {time} outside tabulated range [{start}, {end}] of {what} conductance")]
    OutOfRange {
        what: String,
        time: f64,
        start: f64,
        end: f64,
    },
}

/// Cosine modulation `mean + amplitude * cos(2 pi t / period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingProtocol {
    pub mean: f64,
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
}

impl DrivingProtocol {
    pub fn new(mean: f64, amplitude: f64, period: f64, phase: f64) -> Result<Self, ModelError> {
        let p = Self {
            mean,
            amplitude,
            period,
            phase,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unmodulated conductance. The period is irrelevant and set to 1.
    pub fn constant(value: f64) -> Self {
        Self {
            mean: value,
            amplitude: 0.0,
            period: 1.0,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all_finite = [self.mean, self.amplitude, self.period, self.phase]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(ModelError::Invalid(format!(
                "non-finite protocol parameter in {self:?}"
            )));
        }
        if !(self.period > 0.0) {
            return Err(ModelError::Invalid(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if self.amplitude < 0.0 {
            return Err(ModelError::Invalid(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if self.amplitude > self.mean {
            return Err(ModelError::Invalid(format!(
                "amplitude {} exceeds mean {}: conductance would turn negative",
                self.amplitude, self.mean
            )));
        }
        Ok(())
    }

    pub fn is_modulated(&self) -> bool {
        self.amplitude != 0.0
    }

    pub fn angular_frequency(&self) -> f64 {
        TAU / self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.mean + self.amplitude * (self.angular_frequency() * t + self.phase).cos()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let w = self.angular_frequency();
        -self.amplitude * w * (w * t + self.phase).sin()
    }
}

/// Conductance sampled on a time table, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        if times.len() != values.len() {
            return Err(ModelError::Invalid(format!(
                "tabulated series has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(ModelError::Invalid(
                "tabulated series needs at least two samples".into(),
            ));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ModelError::Invalid(
                "tabulated series contains non-finite entries".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::Invalid(
                "tabulated times must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(ModelError::Invalid(format!(
                "tabulated conductance {v} is negative"
            )));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Interpolated value, or `None` when `t` lies outside the table.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (start, end) = self.range();
        let slack = 1e-12 * (end - start).abs().max(1.0);
        if t < start - slack || t > end + slack {
            return None;
        }
        let t = t.clamp(start, end);
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= self.times.len() => self.times.len() - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let s = (t - t0) / (t1 - t0);
        Some(self.values[k] + s * (self.values[k + 1] - self.values[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Conductance {
    Driven(DrivingProtocol),
    Tabulated(TabulatedSeries),
}

impl Conductance {
    pub fn constant(value: f64) -> Self {
        Conductance::Driven(DrivingProtocol::constant(value))
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Conductance::Driven(p) => p.validate(),
            Conductance::Tabulated(_) => Ok(()),
        }
    }

    fn sample(&self, t: f64, what: impl Fn() -> String) -> Result<f64, ModelError> {
        let value = match self {
            Conductance::Driven(p) => p.eval(t),
            Conductance::Tabulated(s) => s.eval(t).ok_or_else(|| {
                let (start, end) = s.range();
                ModelError::OutOfRange {
                    what: what(),
                    time: t,
                    start,
                    end,
                }
            })?,
        };
        if !value.is_finite() {
            return Err(ModelError::NonFinite { what: what(), time: t });
        }
        // cos() can undershoot zero by an ulp when amplitude == mean
        if value < -1e-12 * value.abs().max(1.0) {
            return Err(ModelError::Negative {
                what: what(),
                value,
                time: t,
            });
        }
        Ok(value.max(0.0))
    }

    /// Same law played `factor` times slower.
    pub fn time_scaled(&self, factor: f64) -> Result<Self, ModelError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ModelError::Invalid(format!("time scale {factor} must be positive")));
        }
        Ok(match self {
            Conductance::Driven(p) => Conductance::Driven(DrivingProtocol {
                period: p.period * factor,
                ..*p
            }),
            Conductance::Tabulated(s) => Conductance::Tabulated(TabulatedSeries::new(
                s.times.iter().map(|t| t * factor).collect(),
                s.values.clone(),
            )?),
        })
    }

    /// Periods of all non-trivial modulations (none for tabulated series).
    fn period(&self) -> Option<f64> {
        match self {
            Conductance::Driven(p) if p.is_modulated() => Some(p.period),
            _ => None,
        }
    }
}

/// `N` bodies exchanging heat pairwise and with a common bath.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalNetwork {
    n_bodies: usize,
    capacities: Vec<f64>,
    /// Row-major `N x N`; diagonal entries stay `None`.
    pair: Vec<Option<Conductance>>,
    bath: Vec<Option<Conductance>>,
    bath_temperature: f64,
}

impl ThermalNetwork {
    /// Network with unit capacities and no couplings.
    pub fn new(n_bodies: usize, bath_temperature: f64) -> Result<Self, ModelError> {
        if n_bodies == 0 {
            return Err(ModelError::Invalid("network needs at least one body".into()));
        }
        if !bath_temperature.is_finite() {
            return Err(ModelError::Invalid("bath temperature must be finite".into()));
        }
        Ok(Self {
            n_bodies,
            capacities: vec![1.0; n_bodies],
            pair: vec![None; n_bodies * n_bodies],
            bath: vec![None; n_bodies],
            bath_temperature,
        })
    }

    pub fn with_capacities(mut self, capacities: Vec<f64>) -> Result<Self, ModelError> {
        if capacities.len() != self.n_bodies {
            return Err(ModelError::Invalid(format!(
                "expected {} capacities, got {}",
                self.n_bodies,
                capacities.len()
            )));
        }
        if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(ModelError::Invalid(format!(
                "heat capacities must be positive and finite, got {c}"
            )));
        }
        self.capacities = capacities;
        Ok(self)
    }

    /// Sets the conductance through which body `i` receives power from `j`.
    pub fn set_pair(&mut self, i: usize, j: usize, g: Conductance) -> Result<(), ModelError> {
        let n = self.n_bodies;
        if i >= n || j >= n || i == j {
            return Err(ModelError::Invalid(format!(
                "pair ({}, {}) invalid for a {n}-body network",
                i + 1,
                j + 1
            )));
        }
        g.validate()?;
        self.pair[i * n + j] = Some(g);
        Ok(())
    }

    pub fn set_bath(&mut self, i: usize, g: Conductance) -> Result<(), ModelError> {
        if i >= self.n_bodies {
            return Err(ModelError::Invalid(format!(
                "bath coupling for body {} in a {}-body network",
                i + 1,
                self.n_bodies
            )));
        }
        g.validate()?;
        self.bath[i] = Some(g);
        Ok(())
    }

    /// Every conductance played `factor` times slower.
    pub fn time_scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let scale = |g: &Option<Conductance>| g.as_ref().map(|g| g.time_scaled(factor)).transpose();
        Ok(Self {
            pair: self.pair.iter().map(scale).collect::<Result<_, _>>()?,
            bath: self.bath.iter().map(scale).collect::<Result<_, _>>()?,
            ..self.clone()
        })
    }

    /// Reciprocal variant: `G_ji` replaced by `G_ij` for every `i < j`.
    pub fn symmetrized(&self) -> Self {
        let n = self.n_bodies;
        let mut out = self.clone();
        for i in 0..n {
            for j in i + 1..n {
                out.pair[j * n + i] = self.pair[i * n + j].clone();
            }
        }
        out
    }

    pub fn n_bodies(&self) -> usize {
        self.n_bodies
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn bath_temperature(&self) -> f64 {
        self.bath_temperature
    }

    pub fn with_bath_temperature(mut self, bath_temperature: f64) -> Self {
        self.bath_temperature = bath_temperature;
        self
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&Conductance> {
        self.pair[i * self.n_bodies + j].as_ref()
    }

    pub fn bath(&self, i: usize) -> Option<&Conductance> {
        self.bath[i].as_ref()
    }

    pub fn pair_conductance(&self, i: usize, j: usize, t: f64) -> Result<f64, ModelError> {
        match self.pair(i, j) {
            Some(g) => g.sample(t, || format!("pair ({}, {})", i + 1, j + 1)),
            None => Ok(0.0),
        }
    }

    pub fn bath_conductance(&self, i: usize, t: f64) -> Result<f64, ModelError> {
        match self.bath(i) {
            Some(g) => g.sample(t, || format!("bath ({})", i + 1)),
            None => Ok(0.0),
        }
    }

    /// Capacity-normalized conductance matrix: off-diagonal `G_ij / C_i`,
    /// diagonal `-(sum_j G_ij + G_ib) / C_i`.
    pub fn conductance_matrix(&self, t: f64) -> Result<DMatrix<f64>, ModelError> {
        let n = self.n_bodies;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let c = self.capacities[i];
            let mut outflow = self.bath_conductance(i, t)?;
            for j in (0..n).filter(|&j| j != i) {
                let g = self.pair_conductance(i, j, t)?;
                m[(i, j)] = g / c;
                outflow += g;
            }
            m[(i, i)] = -outflow / c;
        }
        Ok(m)
    }

    /// `S_i = G_ib T_b / C_i`.
    pub fn source_vector(&self, t: f64) -> Result<DVector<f64>, ModelError> {
        let mut s = self.bath_column(t)?;
        s *= self.bath_temperature;
        Ok(s)
    }

    fn bath_column(&self, t: f64) -> Result<DVector<f64>, ModelError> {
        let n = self.n_bodies;
        let mut col = DVector::zeros(n);
        for i in 0..n {
            col[i] = self.bath_conductance(i, t)? / self.capacities[i];
        }
        Ok(col)
    }

    /// `(N+1) x (N+1)` generator acting on `(T, T_b)`; the bath row is zero.
    pub fn augmented_matrix(&self, t: f64) -> Result<DMatrix<f64>, ModelError> {
        let n = self.n_bodies;
        let g = self.conductance_matrix(t)?;
        let col = self.bath_column(t)?;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&g);
        m.view_mut((0, n), (n, 1)).copy_from(&col);
        Ok(m)
    }

    /// Checks every conductance on `[t_start, t_end]` at `samples + 1`
    /// evenly spaced times.
    pub fn validate_window(&self, t_start: f64, t_end: f64, samples: usize) -> Result<(), ModelError> {
        let samples = samples.max(1);
        for k in 0..=samples {
            let t = t_start + (t_end - t_start) * k as f64 / samples as f64;
            self.conductance_matrix(t)?;
        }
        Ok(())
    }

    fn modulation_periods(&self) -> Vec<f64> {
        self.pair
            .iter()
            .chain(&self.bath)
            .flatten()
            .filter_map(Conductance::period)
            .collect()
    }

    pub fn has_tabulated(&self) -> bool {
        self.pair
            .iter()
            .chain(&self.bath)
            .flatten()
            .any(|g| matches!(g, Conductance::Tabulated(_)))
    }

    /// Shortest modulation period, used to size the default time step.
    pub fn shortest_period(&self) -> Option<f64> {
        self.modulation_periods().into_iter().reduce(f64::min)
    }

    /// Smallest time after which every modulation returns to its start,
    /// searched among integer multiples of the longest period (up to 1000).
    /// `None` for tabulated networks or incommensurate periods; `Some(0.0)`
    /// when nothing is modulated.
    pub fn common_period(&self) -> Option<f64> {
        if self.has_tabulated() {
            return None;
        }
        let periods = self.modulation_periods();
        let longest = match periods.iter().copied().reduce(f64::max) {
            Some(p) => p,
            None => return Some(0.0),
        };
        (1..=1000).map(|m| m as f64 * longest).find(|&candidate| {
            periods.iter().all(|p| {
                let ratio = candidate / p;
                (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0)
            })
        })
    }
}

/// The four cosine laws of the two-body toy model.
///
/// Body 1 receives from body 2 through `G_12 = G + dG cos(2 pi t / L)`, body
/// 2 from body 1 through `G_21 = H + dH cos(2 pi t / L + theta)`, and the
/// bath couplings are `g + dg cos(2 pi t / tau)` and
/// `h + dh cos(2 pi t / tau + theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyDriving {
    pub forward: DrivingProtocol,
    pub backward: DrivingProtocol,
    pub bath_first: DrivingProtocol,
    pub bath_second: DrivingProtocol,
}

/// Instantaneous conductances of the two-body model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyConductances {
    pub g12: f64,
    pub g21: f64,
    pub g1b: f64,
    pub g2b: f64,
}

impl TwoBodyConductances {
    /// Total outflow rate of body 1, `G_12 + G_1b`.
    pub fn outflow_first(&self) -> f64 {
        self.g12 + self.g1b
    }

    /// Total outflow rate of body 2, `G_21 + G_2b`.
    pub fn outflow_second(&self) -> f64 {
        self.g21 + self.g2b
    }
}

/// Scalar parameters of the toy model, in the order they are usually quoted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyParams {
    pub coupling_12: f64,
    pub coupling_21: f64,
    pub bath_1: f64,
    pub bath_2: f64,
    pub coupling_12_amplitude: f64,
    pub coupling_21_amplitude: f64,
    pub bath_1_amplitude: f64,
    pub bath_2_amplitude: f64,
    /// Phase lag of the second-body laws (radians).
    pub phase_shift: f64,
    /// Period of the inter-body couplings.
    pub coupling_period: f64,
    /// Period of the bath couplings.
    pub bath_period: f64,
}

impl TwoBodyDriving {
    pub fn from_params(p: &TwoBodyParams) -> Result<Self, ModelError> {
        Ok(Self {
            forward: DrivingProtocol::new(p.coupling_12, p.coupling_12_amplitude, p.coupling_period, 0.0)?,
            backward: DrivingProtocol::new(
                p.coupling_21,
                p.coupling_21_amplitude,
                p.coupling_period,
                p.phase_shift,
            )?,
            bath_first: DrivingProtocol::new(p.bath_1, p.bath_1_amplitude, p.bath_period, 0.0)?,
            bath_second: DrivingProtocol::new(p.bath_2, p.bath_2_amplitude, p.bath_period, p.phase_shift)?,
        })
    }

    pub fn conductances(&self, t: f64) -> TwoBodyConductances {
        TwoBodyConductances {
            g12: self.forward.eval(t),
            g21: self.backward.eval(t),
            g1b: self.bath_first.eval(t),
            g2b: self.bath_second.eval(t),
        }
    }

    pub fn conductance_rates(&self, t: f64) -> TwoBodyConductances {
        TwoBodyConductances {
            g12: self.forward.derivative(t),
            g21: self.backward.derivative(t),
            g1b: self.bath_first.derivative(t),
            g2b: self.bath_second.derivative(t),
        }
    }

    /// Unit-capacity network driven by these laws.
    pub fn network(&self, bath_temperature: f64) -> Result<ThermalNetwork, ModelError> {
        let mut net = ThermalNetwork::new(2, bath_temperature)?;
        net.set_pair(0, 1, Conductance::Driven(self.forward))?;
        net.set_pair(1, 0, Conductance::Driven(self.backward))?;
        net.set_bath(0, Conductance::Driven(self.bath_first))?;
        net.set_bath(1, Conductance::Driven(self.bath_second))?;
        Ok(net)
    }

    /// Recovers the laws from a two-body network whose four couplings are
    /// all cosine protocols and whose capacities are 1.
    pub fn from_network(net: &ThermalNetwork) -> Option<Self> {
        if net.n_bodies() != 2 || net.capacities().iter().any(|&c| c != 1.0) {
            return None;
        }
        let driven = |g: Option<&Conductance>| match g {
            Some(Conductance::Driven(p)) => Some(*p),
            None => Some(DrivingProtocol::constant(0.0)),
            _ => None,
        };
        Some(Self {
            forward: driven(net.pair(0, 1))?,
            backward: driven(net.pair(1, 0))?,
            bath_first: driven(net.bath(0))?,
            bath_second: driven(net.bath(1))?,
        })
    }
}

/// Temperatures of all bodies at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub time: f64,
    pub temperatures: Vec<f64>,
}

impl ThermalState {
    pub fn new(time: f64, temperatures: Vec<f64>) -> Result<Self, ModelError> {
        if temperatures.is_empty() || temperatures.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::Invalid(
                "thermal state needs finite temperatures for at least one body".into(),
            ));
        }
        Ok(Self { time, temperatures })
    }

    /// Uniform state at the bath temperature.
    pub fn equilibrium(time: f64, n_bodies: usize, bath_temperature: f64) -> Self {
        Self {
            time,
            temperatures: vec![bath_temperature; n_bodies],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn fig2_params(coupling_period: f64) -> TwoBodyParams {
        TwoBodyParams {
            coupling_12: 1.0,
            coupling_21: 0.8,
            bath_1: 0.5,
            bath_2: 0.3,
            coupling_12_amplitude: 0.5,
            coupling_21_amplitude: 0.4,
            bath_1_amplitude: 0.1,
            bath_2_amplitude: 0.1,
            phase_shift: FRAC_PI_2,
            coupling_period,
            bath_period: 1.0,
        }
    }

    fn assert_matrix(m: &DMatrix<f64>, expected: &[&[f64]]) {
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((m[(i, j)] - v).abs() < 1e-12, "({i},{j}): {} vs {v}", m[(i, j)]);
            }
        }
    }

    #[test]
    fn toy_conductances_at_start() {
        let d = TwoBodyDriving::from_params(&fig2_params(10.0)).unwrap();
        let c = d.conductances(0.0);
        assert!((c.g12 - 1.5).abs() < 1e-12);
        assert!((c.g21 - 0.8).abs() < 1e-12);
        assert!((c.g1b - 0.6).abs() < 1e-12);
        assert!((c.g2b - 0.3).abs() < 1e-12);
    }

    #[test]
    fn toy_conductances_periodic() {
        let d = TwoBodyDriving::from_params(&fig2_params(1.0)).unwrap();
        let (a, b) = (d.conductances(0.0), d.conductances(1.0));
        for (x, y) in [(a.g12, b.g12), (a.g21, b.g21), (a.g1b, b.g1b), (a.g2b, b.g2b)] {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fig3_conductances_at_start() {
        let p = TwoBodyParams {
            coupling_12: 0.01,
            coupling_21: 0.1,
            bath_1: 0.01,
            bath_2: 0.01,
            coupling_12_amplitude: 0.005,
            coupling_21_amplitude: 0.05,
            bath_1_amplitude: 0.001,
            bath_2_amplitude: 0.001,
            phase_shift: FRAC_PI_2,
            coupling_period: 10.0,
            bath_period: 1.0,
        };
        let c = TwoBodyDriving::from_params(&p).unwrap().conductances(0.0);
        assert!((c.g12 - 0.015).abs() < 1e-15);
        assert!((c.g21 - 0.1).abs() < 1e-15);
        assert!((c.g1b - 0.011).abs() < 1e-15);
        assert!((c.g2b - 0.01).abs() < 1e-15);
    }

    #[test]
    fn fig2_matrices_at_start() {
        let net = TwoBodyDriving::from_params(&fig2_params(10.0))
            .unwrap()
            .network(300.0)
            .unwrap();
        assert_matrix(&net.conductance_matrix(0.0).unwrap(), &[&[-2.1, 1.5], &[0.8, -1.1]]);
        let s = net.source_vector(0.0).unwrap();
        assert!((s[0] - 180.0).abs() < 1e-10 && (s[1] - 90.0).abs() < 1e-10);
        assert_matrix(
            &net.augmented_matrix(0.0).unwrap(),
            &[&[-2.1, 1.5, 0.6], &[0.8, -1.1, 0.3], &[0.0, 0.0, 0.0]],
        );
    }

    #[test]
    fn uncoupled_network_is_zero() {
        let net = ThermalNetwork::new(3, 300.0).unwrap();
        assert_eq!(net.conductance_matrix(2.0).unwrap(), DMatrix::zeros(3, 3));
        assert_eq!(net.source_vector(2.0).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn single_body_bath_only() {
        let mut net = ThermalNetwork::new(1, 0.0).unwrap();
        net.set_bath(0, Conductance::constant(0.7)).unwrap();
        assert_matrix(&net.conductance_matrix(0.0).unwrap(), &[&[-0.7]]);
        // zero bath temperature gives a zero source
        assert_eq!(net.source_vector(0.0).unwrap()[0], 0.0);
    }

    #[test]
    fn capacities_scale_rows() {
        let mut net = ThermalNetwork::new(2, 300.0)
            .unwrap()
            .with_capacities(vec![2.0, 4.0])
            .unwrap();
        net.set_pair(0, 1, Conductance::constant(1.0)).unwrap();
        net.set_pair(1, 0, Conductance::constant(2.0)).unwrap();
        net.set_bath(0, Conductance::constant(1.0)).unwrap();
        assert_matrix(&net.conductance_matrix(0.0).unwrap(), &[&[-1.0, 0.5], &[0.5, -0.5]]);
        let s = net.source_vector(0.0).unwrap();
        assert!((s[0] - 150.0).abs() < 1e-12 && s[1] == 0.0);
    }

    #[test]
    fn rejects_negative_modulation() {
        assert!(DrivingProtocol::new(0.5, 0.6, 1.0, 0.0).is_err());
        assert!(DrivingProtocol::new(0.5, 0.1, 0.0, 0.0).is_err());
        assert!(DrivingProtocol::new(0.5, 0.1, -2.0, 0.0).is_err());
        assert!(DrivingProtocol::new(f64::NAN, 0.1, 1.0, 0.0).is_err());
        assert!(DrivingProtocol::new(0.5, 0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_bad_indices_and_capacities() {
        let mut net = ThermalNetwork::new(2, 300.0).unwrap();
        assert!(net.set_pair(0, 0, Conductance::constant(1.0)).is_err());
        assert!(net.set_pair(0, 2, Conductance::constant(1.0)).is_err());
        assert!(net.set_bath(2, Conductance::constant(1.0)).is_err());
        assert!(ThermalNetwork::new(0, 300.0).is_err());
        assert!(net.clone().with_capacities(vec![1.0, 0.0]).is_err());
        assert!(net.with_capacities(vec![1.0]).is_err());
    }

    #[test]
    fn tabulated_interpolation_and_range() {
        let s = TabulatedSeries::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(0.5), Some(1.5));
        assert_eq!(s.eval(2.0), Some(1.0));
        assert_eq!(s.eval(3.0), Some(0.0));
        assert_eq!(s.eval(3.5), None);

        let mut net = ThermalNetwork::new(2, 300.0).unwrap();
        net.set_pair(0, 1, Conductance::Tabulated(s)).unwrap();
        assert!(matches!(
            net.conductance_matrix(4.0),
            Err(ModelError::OutOfRange { .. })
        ));
        assert!(TabulatedSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedSeries::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn common_period_of_multiperiodic_driving() {
        let net = TwoBodyDriving::from_params(&fig2_params(10.0))
            .unwrap()
            .network(300.0)
            .unwrap();
        assert!((net.common_period().unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(net.shortest_period(), Some(1.0));

        let mut p = fig2_params(2.5);
        p.bath_period = 1.0;
        let net = TwoBodyDriving::from_params(&p).unwrap().network(300.0).unwrap();
        assert!((net.common_period().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_two_body_driving() {
        let d = TwoBodyDriving::from_params(&fig2_params(10.0)).unwrap();
        let net = d.network(300.0).unwrap();
        assert_eq!(TwoBodyDriving::from_network(&net), Some(d));
    }

    #[test]
    fn time_scaling_stretches_every_law() {
        let mut net = TwoBodyDriving::from_params(&fig2_params(10.0))
            .unwrap()
            .network(300.0)
            .unwrap();
        net.set_bath(0, Conductance::Tabulated(TabulatedSeries::new(vec![0.0, 4.0], vec![1.0, 2.0]).unwrap()))
            .unwrap();
        let slow = net.time_scaled(2.0).unwrap();
        for t in [0.0, 0.3, 1.7, 3.9] {
            assert_eq!(slow.conductance_matrix(2.0 * t).unwrap(), net.conductance_matrix(t).unwrap());
        }
        assert!(net.time_scaled(0.0).is_err());
    }

    #[test]
    fn symmetrized_is_reciprocal() {
        let net = TwoBodyDriving::from_params(&fig2_params(10.0))
            .unwrap()
            .network(300.0)
            .unwrap()
            .symmetrized();
        for t in [0.0, 1.3, 6.2] {
            let m = net.conductance_matrix(t).unwrap();
            assert_eq!(m[(0, 1)], m[(1, 0)]);
            assert_eq!(m[(0, 1)], 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t / 10.0).cos());
        }
    }
}
