// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use thermal_berry::integrator;
use thermal_berry::model::{Conductance, DrivingProtocol, ThermalNetwork};
use thermal_berry::scenario::parse_config;
use thermal_berry::spectral::{self, Gauge};

/// Conductance with mean in [0.05, 3] that never reaches zero.
fn driven() -> impl Strategy<Value = DrivingProtocol> {
    (0.05..3.0f64, 0.0..0.9f64, 0.5..20.0f64, -3.2..3.2f64)
        .prop_map(|(mean, rel, period, phase)| DrivingProtocol::new(mean, rel * mean, period, phase).unwrap())
}

fn network(n: usize) -> impl Strategy<Value = ThermalNetwork> {
    (
        prop::collection::vec(driven(), n * (n - 1)),
        prop::collection::vec(driven(), n),
        prop::collection::vec(0.2..5.0f64, n),
        250.0..350.0f64,
    )
        .prop_map(move |(pairs, baths, capacities, tb)| {
            let mut net = ThermalNetwork::new(n, tb).unwrap().with_capacities(capacities).unwrap();
            let mut k = 0;
            for (i, bath) in baths.into_iter().enumerate() {
                for j in (0..n).filter(|&j| j != i) {
                    net.set_pair(i, j, Conductance::Driven(pairs[k])).unwrap();
                    k += 1;
                }
                net.set_bath(i, Conductance::Driven(bath)).unwrap();
            }
            net
        })
}

fn any_network() -> impl Strategy<Value = ThermalNetwork> {
    (2usize..6).prop_flat_map(network)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn augmented_rows_sum_to_zero(net in any_network(), t in 0.0..50.0f64) {
        let m = net.augmented_matrix(t).unwrap();
        for i in 0..m.nrows() {
            let scale = m.row(i).iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(m.row(i).sum().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn bath_temperature_is_a_fixed_point(net in any_network(), t in 0.0..50.0f64) {
        let tb = net.bath_temperature();
        let g = net.conductance_matrix(t).unwrap();
        let s = net.source_vector(t).unwrap();
        let rate = g * nalgebra::DVector::from_element(net.n_bodies(), tb) + s;
        prop_assert!(rate.amax() <= 1e-12 * tb);
    }

    #[test]
    fn equilibrium_start_stays_put(net in network(3)) {
        let tb = net.bath_temperature();
        let traj = integrator::integrate_exact(&net, &[tb; 3], 0.0, 2.0, 0.01).unwrap();
        for state in traj.states() {
            for v in state {
                prop_assert!((v - tb).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn two_body_spectrum_is_negative(net in network(2), t in 0.0..50.0f64) {
        let basis = spectral::eigendecompose(&net.conductance_matrix(t).unwrap()).unwrap();
        for &l in basis.eigenvalues() {
            prop_assert!(l < 0.0, "eigenvalue {l}");
        }
        prop_assert!(basis.eigenvalue(0) >= basis.eigenvalue(1));
    }

    #[test]
    fn analytic_and_numeric_agree(net in network(2), t in 0.0..50.0f64) {
        let m = net.conductance_matrix(t).unwrap();
        let a = spectral::two_body_eigensystem(&m).unwrap();
        let n = spectral::numeric_eigensystem(&m).unwrap();
        let scale = m.amax();
        for b in 0..2 {
            prop_assert!((a.eigenvalue(b) - n.eigenvalue(b)).abs() <= 1e-9 * scale);
            // projectors are gauge-free
            let pa = a.right(b) * a.left(b).transpose();
            let pn = n.right(b) * n.left(b).transpose();
            prop_assert!((pa - pn).amax() <= 1e-9);
        }
    }

    #[test]
    fn basis_reconstructs_matrix(net in network(2), t in 0.0..50.0f64, first in any::<bool>()) {
        let m = net.conductance_matrix(t).unwrap();
        let gauge = if first { Gauge::FirstComponent } else { Gauge::UnitNorm };
        let basis = spectral::eigendecompose(&m).unwrap().regauge(gauge).unwrap();
        prop_assert!((basis.reconstruct() - &m).amax() <= 1e-12 * m.amax());
        prop_assert!(basis.biorthogonality_residual() <= 1e-12);
        prop_assert!(basis.eigen_residual(&m) <= 1e-12 * m.amax());
    }

    #[test]
    fn config_round_trips(net in network(2), t0 in prop::array::uniform2(250.0..450.0f64), t_end in 1.0..30.0f64) {
        let mut text = format!(
            "name = prop\nn_bodies = 2\nbath_temperature = {:?}\ninitial_temperatures = [{:?}, {:?}]\n\
             capacities = [{:?}, {:?}]\nt_end = {t_end:?}\n",
            net.bath_temperature(), t0[0], t0[1], net.capacities()[0], net.capacities()[1],
        );
        let block = |g: &Conductance| match g {
            Conductance::Driven(p) => format!(
                "{{ mean = {:?}, amplitude = {:?}, period = {:?}, phase = {:?} }}\n",
                p.mean, p.amplitude, p.period, p.phase
            ),
            Conductance::Tabulated(_) => unreachable!(),
        };
        text += &format!("pair 1 2 {}", block(net.pair(0, 1).unwrap()));
        text += &format!("pair 2 1 {}", block(net.pair(1, 0).unwrap()));
        text += &format!("bath 1 {}", block(net.bath(0).unwrap()));
        text += &format!("bath 2 {}", block(net.bath(1).unwrap()));
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(&parsed.network, &net);
        prop_assert_eq!(parsed.initial_temperatures, t0.to_vec());
        prop_assert_eq!(parsed.t_end, t_end);
    }
}
