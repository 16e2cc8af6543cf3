//! Frozen reference values for the quantum layer, plus the structural
//! identity connecting the two density-matrix routes.
//!
//! The constants were frozen from an independent high-precision
//! evaluation of the same models; agreement here guards against silent
//! regressions in the Hamiltonian, the thermal weights, or the
//! correlator wiring.

use bridge_core::entanglement::{rdm_from_correlators, report};
use bridge_core::lattice::{classical_correlators, Method};
use bridge_core::spinchain::{
    build_tfim, correlators, ground_state, log_partition, thermal_state, Boundary,
    QuantumChainSpec, QuantumState,
};

fn chain(sites: usize, j: f64, b: f64, boundary: Boundary, beta: f64) -> QuantumChainSpec {
    QuantumChainSpec { sites, coupling_j: j, field_b: b, boundary, beta }
}

/// The workhorse fixture: a six-site ring at J = B = 1, beta = 8.
fn ring6() -> QuantumChainSpec {
    chain(6, 1.0, 1.0, Boundary::Periodic, 8.0)
}

#[test]
fn ring6_thermal_correlators_match_the_frozen_values() {
    let state = thermal_state(&build_tfim(&ring6()).unwrap(), 8.0).unwrap();
    let c = correlators(&state, 0).unwrap();
    assert!((c.m_x - 0.6234916861634414).abs() < 1e-10, "m_x = {}", c.m_x);
    assert!((c.c_x - 0.5274986033726012).abs() < 1e-10, "c_x = {}", c.c_x);
    assert!((c.c_y - -0.2101350246455626).abs() < 1e-10, "c_y = {}", c.c_y);
    assert!((c.c_z - 0.6596491634001990).abs() < 1e-10, "c_z = {}", c.c_z);
}

#[test]
fn ring6_entanglement_measures_match_the_frozen_values() {
    let state = thermal_state(&build_tfim(&ring6()).unwrap(), 8.0).unwrap();
    let rho = bridge_core::spinchain::two_site_rdm(&state, 0).unwrap();
    let rep = report(&rho).unwrap();
    assert!((rep.negativity - 0.0993206978545907).abs() < 1e-10, "N = {}", rep.negativity);
    assert!((rep.concurrence - 0.1986413957091811).abs() < 1e-10, "C = {}", rep.concurrence);
    assert!(rep.entangled);
    assert!(!rep.repair_applied);
}

#[test]
fn ring6_free_and_ground_energies_match_the_frozen_values() {
    let h = build_tfim(&ring6()).unwrap();
    let f = -log_partition(&h, 8.0).unwrap() / 8.0;
    assert!((f - -7.7417589899920332).abs() < 1e-10, "F = {f}");
    let state = ground_state(&h).unwrap();
    let e0 = match state {
        QuantumState::Pure { energy, .. } => energy,
        QuantumState::DegenerateGround { energy, .. } => energy,
        QuantumState::Thermal { .. } => unreachable!("ground_state never returns a thermal state"),
    };
    assert!((e0 - -7.7274066103125429).abs() < 1e-10, "E0 = {e0}");
}

#[test]
fn ring6_transfer_matrix_correlators_at_n64_match_the_frozen_values() {
    let c = classical_correlators(&ring6(), 64, Method::TransferMatrix).unwrap();
    assert!((c.m_x - 0.6306141061572637).abs() < 1e-9, "m_x = {}", c.m_x);
    assert!((c.c_x - 0.5328470047511273).abs() < 1e-9, "c_x = {}", c.c_x);
    assert!((c.c_y - -0.2204376028720853).abs() < 1e-9, "c_y = {}", c.c_y);
    assert!((c.c_z - 0.6660418057493787).abs() < 1e-9, "c_z = {}", c.c_z);
}

/// The correlator set is a complete description of the two-site state:
/// rebuilding the density matrix from the four numbers reproduces the
/// partial trace exactly, whenever the pair sits on a symmetry axis
/// (any pair of a ring; the unique pair of a two-site open chain).
#[test]
fn correlator_reconstruction_equals_the_partial_trace() {
    let mut cases: Vec<QuantumChainSpec> = Vec::new();
    for sites in 3..=8 {
        for ratio in [0.25, 1.0, 4.0] {
            for beta in [1.0, 8.0] {
                cases.push(chain(sites, 1.0, ratio, Boundary::Periodic, beta));
            }
        }
    }
    cases.push(chain(2, 1.0, 0.7, Boundary::Open, 2.0));
    cases.push(chain(2, 0.3, 1.0, Boundary::Open, 8.0));
    for spec in cases {
        let state = thermal_state(&build_tfim(&spec).unwrap(), spec.beta).unwrap();
        let direct = bridge_core::spinchain::two_site_rdm(&state, 0).unwrap();
        let rebuilt = rdm_from_correlators(&correlators(&state, 0).unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((direct.matrix()[(i, j)] - rebuilt.matrix()[(i, j)]).norm());
            }
        }
        assert!(
            worst < 1e-10,
            "sites={} B={} beta={}: routes differ by {worst:.3e}",
            spec.sites,
            spec.field_b,
            spec.beta
        );
    }
}
