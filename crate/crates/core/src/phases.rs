// SPDX-License-Identifier: Apache-2.0

//! Dynamical and geometric phases along an eigen-trajectory, and the
//! adiabatic thermal state built from them.
//!
//! For each branch `i` the adiabatic ansatz is
//! `T(t) = sum_i alpha_i exp(gd_i(t) + gg_i(t)) phi_i(t) + T_b`, with the
//! dynamical phase `gd_i = int lambda_i dt` and the geometric phase
//! `gg_i = -int psi_i . dphi_i/dt dt`. The dynamical phase uses the
//! composite trapezoid rule on the trajectory grid; the geometric phase is
//! accumulated from overlaps of gauge-fixed eigenvectors at neighbouring
//! grid points.

use nalgebra::DVector;

use crate::integrator::{IntegrationError, Method, Trajectory};
use crate::model::{ModelError, ThermalNetwork, TwoBodyDriving};
use crate::spectral::{self, BiorthogonalBasis, EigenTrajectory, Gauge, SpectralError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("initial state has {got} temperatures, basis has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Cumulative phases per branch on the trajectory grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    times: Vec<f64>,
    dynamical: Vec<Vec<f64>>,
    geometric: Vec<Vec<f64>>,
}

impl PhaseTrajectory {
    pub fn compute(trajectory: &EigenTrajectory) -> Result<Self, PhaseError> {
        Ok(Self {
            times: trajectory.times().to_vec(),
            dynamical: dynamical_phase(trajectory),
            geometric: geometric_phase(trajectory)?,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_branches(&self) -> usize {
        self.dynamical.len()
    }

    pub fn dynamical(&self, branch: usize) -> &[f64] {
        &self.dynamical[branch]
    }

    pub fn geometric(&self, branch: usize) -> &[f64] {
        &self.geometric[branch]
    }
}

/// `int_0^t f` at every grid point.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.extend(values.first().map(|_| 0.0));
    for k in 1..values.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        out.push(acc);
    }
    out
}

pub fn dynamical_phase(trajectory: &EigenTrajectory) -> Vec<Vec<f64>> {
    (0..trajectory.dim())
        .map(|branch| cumulative_trapezoid(trajectory.times(), &trajectory.eigenvalue_series(branch)))
        .collect()
}

/// `gg_i(t_k) = -int_0^{t_k} psi_i . dphi_i/dt`, accumulated from the
/// overlaps of neighbouring grid points:
///
/// `gg_i(t_{k+1}) - gg_i(t_k) = -(ln(psi_k . phi_{k+1}) - ln(psi_{k+1} . phi_k)) / 2`.
///
/// The increment is second-order accurate like the trapezoid rule. It also
/// shifts by exactly `ln(f_{k+1} / f_k)` under a gauge change
/// `phi -> f phi`, so loop values are gauge invariant on the grid, and it
/// vanishes identically for symmetric matrices in the unit-norm gauge.
///
/// Fails when consecutive eigenvectors of a branch have non-positive
/// overlap, i.e. the gauge was not kept continuous.
pub fn geometric_phase(trajectory: &EigenTrajectory) -> Result<Vec<Vec<f64>>, PhaseError> {
    let times = trajectory.times();
    (0..trajectory.dim())
        .map(|branch| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(times.len());
            out.extend(times.first().map(|_| 0.0));
            for k in 1..times.len() {
                let (phi0, phi1) = (trajectory.right(branch, k - 1), trajectory.right(branch, k));
                let (psi0, psi1) = (trajectory.left(branch, k - 1), trajectory.left(branch, k));
                let forward = psi0.dot(phi1);
                let backward = psi1.dot(phi0);
                if phi1.dot(phi0) <= 0.0 || !(forward > 0.0) || !(backward > 0.0) {
                    return Err(PhaseError::InvalidTrajectory(format!(
                        "eigenvector of branch {} flips sign between t = {} and t = {}",
                        branch + 1,
                        times[k - 1],
                        times[k]
                    )));
                }
                acc -= 0.5 * (forward.ln() - backward.ln());
                out.push(acc);
            }
            Ok(out)
        })
        .collect()
}

/// `alpha_i = psi_i(t_0) . (T_0 - T_b)`.
pub fn expansion_constants(
    basis: &BiorthogonalBasis,
    initial: &[f64],
    bath_temperature: f64,
) -> Result<Vec<f64>, PhaseError> {
    if initial.len() != basis.dim() {
        return Err(PhaseError::DimensionMismatch {
            expected: basis.dim(),
            got: initial.len(),
        });
    }
    let excess = DVector::from_iterator(initial.len(), initial.iter().map(|t| t - bath_temperature));
    Ok((0..basis.dim()).map(|i| basis.left(i).dot(&excess)).collect())
}

/// Adiabatic temperatures at grid index `k`.
pub fn adiabatic_state(
    trajectory: &EigenTrajectory,
    phases: &PhaseTrajectory,
    alpha: &[f64],
    bath_temperature: f64,
    k: usize,
) -> Vec<f64> {
    let mut state = DVector::from_element(trajectory.dim(), bath_temperature);
    for (i, a) in alpha.iter().enumerate() {
        let growth = (phases.dynamical(i)[k] + phases.geometric(i)[k]).exp();
        state += a * growth * trajectory.right(i, k);
    }
    state.iter().copied().collect()
}

/// Everything needed to evaluate the adiabatic solution on one grid.
#[derive(Debug, Clone)]
pub struct AdiabaticSolution {
    pub eigen: EigenTrajectory,
    pub phases: PhaseTrajectory,
    pub alpha: Vec<f64>,
    pub bath_temperature: f64,
}

impl AdiabaticSolution {
    /// Tracks the conductance-matrix spectrum of `network` over `times` and
    /// accumulates the phases.
    pub fn solve(
        network: &ThermalNetwork,
        initial: &[f64],
        times: &[f64],
        gauge: Gauge,
    ) -> Result<Self, PhaseError> {
        let eigen = spectral::track_branches(times, gauge, |t| network.conductance_matrix(t))?;
        let phases = PhaseTrajectory::compute(&eigen)?;
        let alpha = expansion_constants(eigen.basis(0), initial, network.bath_temperature())?;
        Ok(Self {
            eigen,
            phases,
            alpha,
            bath_temperature: network.bath_temperature(),
        })
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        adiabatic_state(&self.eigen, &self.phases, &self.alpha, self.bath_temperature, k)
    }

    pub fn trajectory(&self) -> Trajectory {
        let states: Vec<Vec<f64>> = (0..self.eigen.len()).map(|k| self.state(k)).collect();
        Trajectory::from_states(Method::Adiabatic, self.eigen.times().to_vec(), &states)
            .expect("one state per grid point")
    }
}

/// Two-body geometric phase from the closed-form integrand
/// `-x dx/dt y / (1 + x^2 y)` with `dx/dt` differentiated analytically from
/// the driving laws. Matches [`geometric_phase`] in the first-component
/// gauge.
pub fn two_body_closed_form_geometric_phase(
    driving: &TwoBodyDriving,
    times: &[f64],
    branch: usize,
) -> Result<Vec<f64>, PhaseError> {
    if branch > 1 {
        return Err(PhaseError::InvalidTrajectory(format!(
            "two-body model has branches 1 and 2, got {}",
            branch + 1
        )));
    }
    let sign = if branch == 0 { 1.0 } else { -1.0 };
    let integrand = times
        .iter()
        .map(|&t| {
            let c = driving.conductances(t);
            let r = driving.conductance_rates(t);
            let (a, b) = (c.outflow_first(), c.outflow_second());
            let (da, db) = (r.outflow_first(), r.outflow_second());
            let half_diff = 0.5 * (b - a);
            let discriminant = half_diff * half_diff + c.g12 * c.g21;
            if !(discriminant > 0.0) {
                return Err(PhaseError::Spectral(SpectralError::AtTime {
                    time: t,
                    source: Box::new(SpectralError::ExceptionalPoint("eigenvalues coalesce".into())),
                }));
            }
            let root = discriminant.sqrt();
            let d_discriminant = half_diff * (db - da) + r.g12 * c.g21 + c.g12 * r.g21;
            let lambda = -0.5 * (a + b) + sign * root;
            let d_lambda = -0.5 * (da + db) + sign * d_discriminant / (2.0 * root);
            let denom = b + lambda;
            let x = c.g21 / denom;
            let dx = (r.g21 * denom - c.g21 * (db + d_lambda)) / (denom * denom);
            let y = c.g12 / c.g21;
            Ok(-x * dx * y / (1.0 + x * x * y))
        })
        .collect::<Result<Vec<f64>, PhaseError>>()?;
    Ok(cumulative_trapezoid(times, &integrand))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Conductance, DrivingProtocol};
    use nalgebra::DMatrix;

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..=n).map(|k| end * k as f64 / n as f64).collect()
    }

    #[test]
    fn constant_eigenvalue_phase() {
        let times = grid(30, 3.0);
        let m = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -5.0]);
        let traj = spectral::track_branches(&times, Gauge::UnitNorm, |_| Ok(m.clone())).unwrap();
        let phases = PhaseTrajectory::compute(&traj).unwrap();
        assert!((phases.dynamical(0).last().unwrap() + 6.0).abs() < 1e-12);
        for branch in 0..2 {
            assert!(phases.geometric(branch).iter().all(|g| g.abs() < 1e-12));
        }
    }

    #[test]
    fn cosine_eigenvalue_integrates_to_mean() {
        // single body: lambda(t) = -(1 - cos(2 pi t / tau)) with tau = 2
        let mut net = ThermalNetwork::new(1, 300.0).unwrap();
        net.set_bath(0, Conductance::Driven(DrivingProtocol::new(1.0, 1.0, 2.0, std::f64::consts::PI).unwrap()))
            .unwrap();
        let times = grid(2000, 2.0);
        let traj = spectral::track_branches(&times, Gauge::UnitNorm, |t| net.conductance_matrix(t)).unwrap();
        let gd = &dynamical_phase(&traj)[0];
        assert!((gd.last().unwrap() + 2.0).abs() < 1e-9);
        assert!(gd.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_body_expansion_constant() {
        let m = DMatrix::from_element(1, 1, -0.4);
        let basis = spectral::eigendecompose(&m).unwrap();
        assert_eq!(expansion_constants(&basis, &[412.5], 300.0).unwrap(), vec![112.5]);
    }

    #[test]
    fn expansion_reconstructs_initial_state() {
        let m = DMatrix::from_row_slice(2, 2, &[-2.1, 1.5, 0.8, -1.1]);
        let basis = spectral::eigendecompose(&m).unwrap();
        let alpha = expansion_constants(&basis, &[400.0, 300.0], 300.0).unwrap();
        let rebuilt = alpha[0] * basis.right(0) + alpha[1] * basis.right(1);
        assert!((rebuilt[0] - 100.0).abs() < 1e-10 && rebuilt[1].abs() < 1e-10);
        assert_eq!(expansion_constants(&basis, &[300.0, 300.0], 300.0).unwrap(), vec![0.0, 0.0]);
        assert!(expansion_constants(&basis, &[300.0], 300.0).is_err());
    }

    #[test]
    fn constant_reciprocal_matches_matrix_exponential() {
        let mut net = ThermalNetwork::new(2, 300.0).unwrap();
        net.set_pair(0, 1, Conductance::constant(0.7)).unwrap();
        net.set_pair(1, 0, Conductance::constant(0.7)).unwrap();
        net.set_bath(0, Conductance::constant(0.4)).unwrap();
        net.set_bath(1, Conductance::constant(0.2)).unwrap();
        let times = grid(100, 4.0);
        let sol = AdiabaticSolution::solve(&net, &[400.0, 320.0], &times, Gauge::UnitNorm).unwrap();
        let g = net.conductance_matrix(0.0).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let expected = (&g * t).exp() * DVector::from_column_slice(&[100.0, 20.0]);
            let got = sol.state(k);
            assert!((got[0] - 300.0 - expected[0]).abs() < 1e-8, "t = {t}");
            assert!((got[1] - 300.0 - expected[1]).abs() < 1e-8, "t = {t}");
        }
        assert_eq!(sol.state(0), vec![400.0, 320.0]);
    }

    #[test]
    fn sign_flip_is_rejected() {
        let times = grid(2, 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -5.0]);
        let traj = spectral::track_branches(&times, Gauge::UnitNorm, |_| Ok(m.clone())).unwrap();
        let mut bases = traj.bases().to_vec();
        bases[1].scale_branch(0, -1.0);
        let bad = EigenTrajectory::from_parts(times, bases, Gauge::UnitNorm);
        assert!(matches!(geometric_phase(&bad), Err(PhaseError::InvalidTrajectory(_))));
    }
}
