//! Property-based checks: the two exact evaluators agree on random
//! inputs, expectations respect the lattice symmetries, sampling is
//! reproducible, and the canonical float format round-trips bitwise.

use bridge_core::entanglement::{concurrence, negativity, rdm_from_correlators};
use bridge_core::lattice::{enumerate_log_z, expectation, transfer_log_z, Method};
use bridge_core::mc::{estimate, McConfig};
use bridge_core::spinchain::{Boundary, CorrelatorSet, Provenance, QuantumChainSpec};
use bridge_core::trotter::{
    insertion_for, map_tfim, ClassicalLatticeSpec, Observable, TimeBoundary,
};
use proptest::prelude::*;

fn arb_lattice() -> impl Strategy<Value = ClassicalLatticeSpec> {
    (1usize..=4, 1usize..=3, -2.0f64..2.0, -2.0f64..2.0, any::<bool>()).prop_map(
        |(columns, rows, spatial, temporal, periodic)| ClassicalLatticeSpec {
            columns,
            rows,
            spatial_coupling: spatial,
            temporal_coupling: temporal,
            log_prefactor: 0.0,
            boundary_space: if periodic && columns >= 2 {
                Boundary::Periodic
            } else {
                Boundary::Open
            },
            boundary_time: TimeBoundary::Periodic,
            beta: None,
        },
    )
}

/// Chain plus a slice count keeping the lattice enumerable quickly.
fn arb_chain() -> impl Strategy<Value = (QuantumChainSpec, usize)> {
    (2usize..=4, -1.5f64..1.5, 0.1f64..2.0, 0.2f64..4.0, any::<bool>()).prop_flat_map(
        |(sites, j, b, beta, periodic)| {
            let boundary = if periodic && sites >= 3 {
                Boundary::Periodic
            } else {
                Boundary::Open
            };
            let spec = QuantumChainSpec { sites, coupling_j: j, field_b: b, boundary, beta };
            (Just(spec), 1usize..=(12 / sites))
        },
    )
}

fn observable_menu(spec: &QuantumChainSpec) -> Vec<Observable> {
    vec![
        Observable::Sx { site: 0 },
        Observable::Sz { site: 0 },
        Observable::SxSx { site_a: 0, site_b: spec.sites - 1 },
        Observable::SySy { site: 0 },
        Observable::SzSz { site: 0 },
    ]
}

proptest! {
    #[test]
    fn evaluators_agree_on_log_z(lattice in arb_lattice()) {
        let by_enum = enumerate_log_z(&lattice).unwrap();
        let by_transfer = transfer_log_z(&lattice).unwrap();
        let rel = (by_enum - by_transfer).abs() / by_enum.abs().max(1.0);
        prop_assert!(rel < 1e-12, "enum {by_enum} vs transfer {by_transfer}");
    }

    #[test]
    fn evaluators_agree_on_observables((spec, n) in arb_chain(), pick in 0usize..5) {
        let lattice = map_tfim(&spec, n).unwrap();
        let observable = observable_menu(&spec)[pick];
        let ins = insertion_for(&lattice, observable, 0).unwrap();
        let a = expectation(&lattice, &ins, Method::Enumeration).unwrap();
        let b = expectation(&lattice, &ins, Method::TransferMatrix).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-10,
            "{observable:?}: enum {} vs transfer {}", a.value, b.value);
        prop_assert!((a.log_partition - b.log_partition).abs()
            / a.log_partition.abs().max(1.0) < 1e-12);
    }

    #[test]
    fn expectations_are_slice_shift_invariant((spec, n) in arb_chain(), pick in 0usize..5, shift in 0usize..8) {
        let lattice = map_tfim(&spec, n).unwrap();
        let observable = observable_menu(&spec)[pick];
        let slice = shift % n;
        let at_zero = expectation(
            &lattice,
            &insertion_for(&lattice, observable, 0).unwrap(),
            Method::TransferMatrix,
        )
        .unwrap();
        let shifted = expectation(
            &lattice,
            &insertion_for(&lattice, observable, slice).unwrap(),
            Method::TransferMatrix,
        )
        .unwrap();
        prop_assert!((at_zero.value - shifted.value).abs() < 1e-10,
            "{observable:?} drifts between slice 0 and slice {slice}");
    }

    #[test]
    fn canonical_lattice_json_round_trips(lattice in arb_lattice(), beta in proptest::option::of(0.1f64..10.0)) {
        let mut lattice = lattice;
        lattice.beta = beta;
        let text = lattice.to_canonical_json().unwrap();
        let back = ClassicalLatticeSpec::from_json(&text).unwrap();
        prop_assert_eq!(back, lattice);
    }

    #[test]
    fn canonical_float_format_round_trips_bitwise(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = bridge_core::canonical::format_f64(x);
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits(), "{}", text);
    }

    #[test]
    fn werner_measures_grow_with_the_mixing_weight(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let measure = |w: f64| {
            let set = CorrelatorSet::exact(0.0, w, -w, w, Provenance::QuantumExact);
            let rho = rdm_from_correlators(&set).unwrap();
            (concurrence(&rho).unwrap(), negativity(&rho).unwrap())
        };
        let (c_lo, n_lo) = measure(lo);
        let (c_hi, n_hi) = measure(hi);
        prop_assert!(c_hi >= c_lo - 1e-12, "concurrence fell from {c_lo} to {c_hi}");
        prop_assert!(n_hi >= n_lo - 1e-12, "negativity fell from {n_lo} to {n_hi}");
    }
}

proptest! {
    // Monte Carlo cases are costlier; a handful suffices to catch a
    // broken seed path.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampling_is_seed_deterministic((spec, n) in arb_chain(), seed in any::<u64>()) {
        let lattice = map_tfim(&spec, n).unwrap();
        let ins = insertion_for(&lattice, Observable::Sx { site: 0 }, 0).unwrap();
        let cfg = McConfig { seed, chains: 2, sweeps: 200, burn_in: 40, bins: 8 };
        let first = estimate(&lattice, &ins, &cfg).unwrap();
        let second = estimate(&lattice, &ins, &cfg).unwrap();
        prop_assert_eq!(first.mean.to_bits(), second.mean.to_bits());
        prop_assert_eq!(first.std_err.to_bits(), second.std_err.to_bits());
        prop_assert!(first.max_abs_sample <= 1.0 / (spec.beta * spec.field_b / n as f64).tanh() + 1e-9,
            "sample {} exceeds the analytic bound", first.max_abs_sample);
    }
}
