//! The mapping engine: quantum specifications in, classical lattice
//! specifications out.
//!
//! Two mappings live here. The chain mapping sends an M-site
//! transverse-field Ising chain at inverse temperature beta to an
//! M x n classical Ising lattice, one extra (periodic) dimension of n
//! time slices, with
//!
//! ```text
//! spatial coupling   K/n          K     = beta * J
//! temporal coupling  K_n          K_n   = ln(coth(gamma/n)) / 2
//! log prefactor      M * (n/2) * ln(sinh(2 gamma/n) / 2)
//! gamma = beta * B
//! ```
//!
//! The qubit mapping factors a single-qubit propagator (real time or
//! thermal) into a product of exact 2x2 transfer elements of the form
//! `A exp(h s s' + K (s + s'))`; because each element is solved from the
//! exact slice matrix, the chain contraction reproduces the propagator
//! for every slice count, not just asymptotically.
//!
//! Quantum observables translate to weight modifications of the
//! classical lattice (insertions); building those lists also happens
//! here so every consumer shares one convention.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{Error, Module, Result};
use crate::spinchain::QuantumChainSpec;

/// Schema tag embedded in canonical lattice JSON documents.
pub const LATTICE_SCHEMA: &str = "lattice/1";

/// Spatial boundary of the mapped lattice.
pub use crate::spinchain::Boundary;

/// An anisotropic classical Ising lattice of `columns` x `rows` spins.
///
/// Rows are always closed into a ring (the partition-function trace);
/// `beta` carries the originating inverse temperature when the lattice
/// came from a quantum chain, so free energies can be reported in the
/// quantum units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLatticeSpec {
    pub columns: usize,
    pub rows: usize,
    pub spatial_coupling: f64,
    pub temporal_coupling: f64,
    pub log_prefactor: f64,
    pub boundary_space: Boundary,
    pub boundary_time: TimeBoundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// The time direction is always periodic; the type exists so the
/// serialized document states it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBoundary {
    Periodic,
}

impl ClassicalLatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.columns < 1 || self.rows < 1 {
            return Err(Error::invalid(Module::Trotter, "lattice needs at least one column and one row"));
        }
        for (label, v) in [
            ("spatial_coupling", self.spatial_coupling),
            ("temporal_coupling", self.temporal_coupling),
            ("log_prefactor", self.log_prefactor),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(Module::Trotter, format!("{label} must be finite")));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::invalid(Module::Trotter, "beta context must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn spins(&self) -> usize {
        self.columns * self.rows
    }

    /// Spatial bonds within one row: pairs of column indices.
    ///
    /// A periodic 2-column lattice deliberately yields the bond (0, 1)
    /// twice; both evaluators honour the double bond.
    pub fn spatial_bond_columns(&self) -> Vec<(usize, usize)> {
        let m = self.columns;
        match self.boundary_space {
            Boundary::Open => (0..m.saturating_sub(1)).map(|j| (j, j + 1)).collect(),
            Boundary::Periodic => (0..m).map(|j| (j, (j + 1) % m)).collect(),
        }
    }

    /// Total bond count over the whole lattice (temporal bonds always
    /// wrap, including the self-bond ring when rows = 1).
    pub fn bond_count(&self) -> usize {
        self.spatial_bond_columns().len() * self.rows + self.spins()
    }

    /// Canonical JSON document: schema-tagged, keys sorted, all floats
    /// printed with 17 significant digits.
    pub fn to_canonical_json(&self) -> Result<String> {
        canonical::to_tagged_string(LATTICE_SCHEMA, self)
    }

    /// Parses and validates a canonical lattice document.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = canonical::from_tagged_str(LATTICE_SCHEMA, text, Module::Trotter)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Maps a quantum chain onto its classical lattice with `n` time slices.
pub fn map_tfim(spec: &QuantumChainSpec, n: usize) -> Result<ClassicalLatticeSpec> {
    spec.validate()?;
    if n < 1 {
        return Err(Error::invalid(Module::Trotter, "trotter slice count must be >= 1"));
    }
    if spec.field_b == 0.0 {
        return Err(Error::invalid(
            Module::Trotter,
            "B = 0 makes the mapping degenerate (the lattice decouples in time); \
             evaluate the classical chain directly instead",
        ));
    }
    if spec.field_b < 0.0 {
        return Err(Error::invalid(
            Module::Trotter,
            "B must be positive; rotate the spin axes to flip the field sign first",
        ));
    }
    let gamma = spec.beta * spec.field_b;
    let k = spec.beta * spec.coupling_j;
    let eps = gamma / n as f64;
    let temporal = 0.5 * (1.0 / eps.tanh()).ln();
    let log_prefactor = spec.sites as f64 * (n as f64 / 2.0) * (0.5 * (2.0 * eps).sinh()).ln();
    let lattice = ClassicalLatticeSpec {
        columns: spec.sites,
        rows: n,
        spatial_coupling: k / n as f64,
        temporal_coupling: temporal,
        log_prefactor,
        boundary_space: spec.boundary,
        boundary_time: TimeBoundary::Periodic,
        beta: Some(spec.beta),
    };
    if !lattice.temporal_coupling.is_finite() || !lattice.log_prefactor.is_finite() {
        return Err(Error::numeric(
            Module::Trotter,
            format!("mapping overflowed at gamma/n = {eps:.3e}; increase n or reduce beta*B"),
        ));
    }
    lattice.validate()?;
    Ok(lattice)
}

/// Kinds of classical weight modification that represent quantum
/// observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertionKind {
    /// Read the spin value at (site, slice).
    Z,
    /// Multiply the weight by exp(-strength * s * s') for the temporal
    /// bond from (site, slice) to (site, slice+1).
    XBond,
    /// Like XBond, additionally reading the spin sign on the later
    /// slice; only valid in pairs, which contribute a global factor -1
    /// per pair.
    YSpinBond,
}

/// One elementary insertion; quantum observables become short lists of
/// these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionSpec {
    pub kind: InsertionKind,
    pub site: usize,
    pub slice: usize,
    /// 2 * K_n for the bond kinds, 0 for Z.
    pub strength: f64,
}

/// Observables with classical insertion representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Transverse magnetization at one site.
    Sx { site: usize },
    /// Longitudinal magnetization at one site.
    Sz { site: usize },
    /// sx sx two-point function between any two distinct sites.
    SxSx { site_a: usize, site_b: usize },
    /// sy sy between `site` and its successor.
    SySy { site: usize },
    /// sz sz between `site` and its successor.
    SzSz { site: usize },
}

/// Translates `observable` into insertions at row `slice`.
///
/// The successor of the last column only exists on a spatially periodic
/// lattice; asking for it on an open one is an error.
pub fn insertion_for(
    lattice: &ClassicalLatticeSpec,
    observable: Observable,
    slice: usize,
) -> Result<Vec<InsertionSpec>> {
    lattice.validate()?;
    if slice >= lattice.rows {
        return Err(Error::invalid(
            Module::Trotter,
            format!("slice {slice} out of range for {} rows", lattice.rows),
        ));
    }
    let m = lattice.columns;
    let check_site = |site: usize| -> Result<()> {
        if site >= m {
            return Err(Error::invalid(
                Module::Trotter,
                format!("site {site} out of range for {m} columns"),
            ));
        }
        Ok(())
    };
    let successor = |site: usize| -> Result<usize> {
        check_site(site)?;
        match lattice.boundary_space {
            Boundary::Periodic => Ok((site + 1) % m),
            Boundary::Open => {
                if site + 1 < m {
                    Ok(site + 1)
                } else {
                    Err(Error::invalid(
                        Module::Trotter,
                        format!("site {site} has no successor on an open lattice of {m} columns"),
                    ))
                }
            }
        }
    };
    let strength = 2.0 * lattice.temporal_coupling;
    let bond = |kind, site| InsertionSpec { kind, site, slice, strength };
    let read = |site| InsertionSpec { kind: InsertionKind::Z, site, slice, strength: 0.0 };

    match observable {
        Observable::Sz { site } => {
            check_site(site)?;
            Ok(vec![read(site)])
        }
        Observable::Sx { site } => {
            check_site(site)?;
            Ok(vec![bond(InsertionKind::XBond, site)])
        }
        Observable::SxSx { site_a, site_b } => {
            check_site(site_a)?;
            check_site(site_b)?;
            if site_a == site_b {
                return Err(Error::invalid(
                    Module::Trotter,
                    "unsupported observable: sx sx needs two distinct sites (it is the identity otherwise)",
                ));
            }
            Ok(vec![bond(InsertionKind::XBond, site_a), bond(InsertionKind::XBond, site_b)])
        }
        Observable::SySy { site } => {
            let next = successor(site)?;
            Ok(vec![bond(InsertionKind::YSpinBond, site), bond(InsertionKind::YSpinBond, next)])
        }
        Observable::SzSz { site } => {
            let next = successor(site)?;
            Ok(vec![read(site), read(next)])
        }
    }
}

/// Constants of one exact 2x2 transfer element
/// `element(s, s') = A exp(h s s' + K (s + s'))` for the qubit
/// Hamiltonian `H = E sz + Delta sx` over a complex time step:
/// the element matrix is exp(-epsilon H), with epsilon = i t / m for
/// real-time slices and epsilon = beta / m for thermal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferElementConstants {
    pub a: Complex64,
    pub h: Complex64,
    pub k: Complex64,
    pub epsilon: Complex64,
    /// Principal arguments of the three distinct matrix entries
    /// (up-up, down-down, off-diagonal) whose logarithms built the
    /// constants; fixes the branch choice explicitly.
    pub branch_args: [f64; 3],
}

impl TransferElementConstants {
    /// Rebuilds the 2x2 element matrix, index 0 being spin up.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let a = self.a * (self.h + 2.0 * self.k).exp();
        let d = self.a * (self.h - 2.0 * self.k).exp();
        let b = self.a * (-self.h).exp();
        DMatrix::from_row_slice(2, 2, &[a, b, b, d])
    }
}

/// Exact slice matrix exp(-epsilon (E sz + Delta sx)) in closed form.
pub fn qubit_slice_matrix(e_field: f64, delta: f64, epsilon: Complex64) -> DMatrix<Complex64> {
    let omega = (e_field * e_field + delta * delta).sqrt();
    let (ch, sh_over) = if omega > 0.0 {
        let z = epsilon * omega;
        (z.cosh(), z.sinh() / omega)
    } else {
        (Complex64::new(1.0, 0.0), epsilon)
    };
    let a = ch - e_field * sh_over;
    let d = ch + e_field * sh_over;
    let b = -delta * sh_over;
    DMatrix::from_row_slice(2, 2, &[a, b, b, d])
}

/// Solves the transfer-element constants from the exact slice matrix.
///
/// Each constant is assembled from principal logarithms of the exact
/// entries, so the reconstruction identities
/// `A e^{h+2K} = a`, `A e^{h-2K} = d`, `A e^{-h} = b`
/// hold to machine precision for any branch the entries land on
/// (thermal continuation makes b negative, giving A an imaginary
/// phase; that is expected and recorded).
pub fn solve_transfer_element(
    e_field: f64,
    delta: f64,
    epsilon: Complex64,
) -> Result<TransferElementConstants> {
    if !e_field.is_finite() || !delta.is_finite() || !epsilon.re.is_finite() || !epsilon.im.is_finite() {
        return Err(Error::invalid(Module::Trotter, "transfer element inputs must be finite"));
    }
    if delta == 0.0 {
        return Err(Error::numeric(
            Module::Trotter,
            "Delta = 0 makes the mapping singular (the off-diagonal element vanishes)",
        ));
    }
    if epsilon.norm() == 0.0 {
        return Err(Error::invalid(Module::Trotter, "epsilon must be nonzero"));
    }
    let m = qubit_slice_matrix(e_field, delta, epsilon);
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    for (label, z) in [("up-up", a), ("down-down", d), ("off-diagonal", b)] {
        if z.norm() < 1e-250 {
            return Err(Error::numeric(
                Module::Trotter,
                format!("slice matrix {label} entry vanishes at this epsilon; the mapping is singular"),
            ));
        }
    }
    let (la, ld, lb) = (a.ln(), d.ln(), b.ln());
    Ok(TransferElementConstants {
        a: (0.25 * (la + ld + 2.0 * lb)).exp(),
        h: 0.25 * (la + ld - 2.0 * lb),
        k: 0.25 * (la - ld),
        epsilon,
        branch_args: [a.arg(), d.arg(), b.arg()],
    })
}

/// Contracts `m` exact transfer elements for the real-time propagator;
/// equals exp(-i H t) for every m, since each element is exact.
pub fn qubit_chain_propagator(
    e_field: f64,
    delta: f64,
    t: f64,
    m: usize,
) -> Result<DMatrix<Complex64>> {
    if m < 1 {
        return Err(Error::invalid(Module::Trotter, "slice count m must be >= 1"));
    }
    if !t.is_finite() {
        return Err(Error::invalid(Module::Trotter, "time t must be finite"));
    }
    let epsilon = Complex64::new(0.0, t / m as f64);
    let slice = solve_transfer_element(e_field, delta, epsilon)?.matrix();
    let mut out = DMatrix::<Complex64>::identity(2, 2);
    for _ in 0..m {
        out = &out * &slice;
    }
    Ok(out)
}

/// Thermal continuation of the chain: the closed path sum
/// tr[(element matrix)^m] with epsilon = beta/m, equal to tr exp(-beta H).
pub fn qubit_thermal_trace(e_field: f64, delta: f64, beta: f64, m: usize) -> Result<Complex64> {
    if m < 1 {
        return Err(Error::invalid(Module::Trotter, "slice count m must be >= 1"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(Module::Trotter, "beta must be positive and finite"));
    }
    let epsilon = Complex64::new(beta / m as f64, 0.0);
    let slice = solve_transfer_element(e_field, delta, epsilon)?.matrix();
    let mut prod = DMatrix::<Complex64>::identity(2, 2);
    for _ in 0..m {
        prod = &prod * &slice;
    }
    Ok(prod[(0, 0)] + prod[(1, 1)])
}

/// Exact propagator exp(-i H t) for comparison columns.
pub fn qubit_propagator_exact(e_field: f64, delta: f64, t: f64) -> DMatrix<Complex64> {
    qubit_slice_matrix(e_field, delta, Complex64::new(0.0, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinchain::QuantumChainSpec;
    use approx::assert_abs_diff_eq;

    fn chain(sites: usize, j: f64, b: f64, boundary: Boundary, beta: f64) -> QuantumChainSpec {
        QuantumChainSpec { sites, coupling_j: j, field_b: b, boundary, beta }
    }

    #[test]
    fn temporal_coupling_fixtures() {
        // gamma = 1, n = 1: K_1 = ln(coth(1))/2.
        let l = map_tfim(&chain(3, 1.0, 1.0, Boundary::Periodic, 1.0), 1).unwrap();
        assert_abs_diff_eq!(l.temporal_coupling, 0.13617073445591577671, epsilon = 1e-15);
        // gamma = 1, n = 4.
        let l = map_tfim(&chain(3, 1.0, 1.0, Boundary::Periodic, 1.0), 4).unwrap();
        assert_abs_diff_eq!(l.temporal_coupling, 0.70341455687364762638, epsilon = 1e-15);
        assert!(l.temporal_coupling > 0.0);
    }

    #[test]
    fn lattice_shape_and_couplings() {
        let spec = chain(4, 0.7, 1.3, Boundary::Periodic, 2.0);
        let l = map_tfim(&spec, 8).unwrap();
        assert_eq!(l.columns, 4);
        assert_eq!(l.rows, 8);
        assert_eq!(l.spins(), 32);
        // Periodic space: M*n spatial + M*n temporal bonds.
        assert_eq!(l.bond_count(), 64);
        assert_abs_diff_eq!(l.spatial_coupling, 2.0 * 0.7 / 8.0, epsilon = 1e-15);
        let gamma_over_n: f64 = 2.0 * 1.3 / 8.0;
        let expect_prefactor = 4.0 * 4.0 * (0.5 * (2.0 * gamma_over_n).sinh()).ln();
        assert_abs_diff_eq!(l.log_prefactor, expect_prefactor, epsilon = 1e-13);
        assert_eq!(l.beta, Some(2.0));

        let open = map_tfim(&chain(4, 0.7, 1.3, Boundary::Open, 2.0), 8).unwrap();
        assert_eq!(open.bond_count(), 3 * 8 + 32);
    }

    #[test]
    fn zero_coupling_decouples_columns() {
        let l = map_tfim(&chain(3, 0.0, 1.0, Boundary::Open, 1.0), 4).unwrap();
        assert_eq!(l.spatial_coupling, 0.0);
    }

    #[test]
    fn zero_or_negative_field_is_rejected() {
        let err = map_tfim(&chain(3, 1.0, 0.0, Boundary::Open, 1.0), 4).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("degenerate"), "{err}");
        assert!(map_tfim(&chain(3, 1.0, -1.0, Boundary::Open, 1.0), 4).is_err());
    }

    #[test]
    fn canonical_json_round_trips() {
        let l = map_tfim(&chain(3, 1.1, 0.9, Boundary::Periodic, 1.7), 5).unwrap();
        let text = l.to_canonical_json().unwrap();
        assert!(text.contains("\"schema\""));
        assert!(text.contains("lattice/1"));
        let back = ClassicalLatticeSpec::from_json(&text).unwrap();
        assert_eq!(back, l);
        // Bytes are stable under a second serialization.
        assert_eq!(back.to_canonical_json().unwrap(), text);
    }

    #[test]
    fn xbond_factor_matches_tanh_coth() {
        // gamma/n = 0.5: exp(-2 K_n) = tanh(1/2), exp(+2 K_n) = coth(1/2).
        let l = map_tfim(&chain(2, 0.0, 1.0, Boundary::Open, 1.0), 2).unwrap();
        let ins = insertion_for(&l, Observable::Sx { site: 0 }, 0).unwrap();
        assert_eq!(ins.len(), 1);
        assert_eq!(ins[0].kind, InsertionKind::XBond);
        assert_abs_diff_eq!((-ins[0].strength).exp(), 0.4621171572600097585, epsilon = 1e-15);
        assert_abs_diff_eq!(ins[0].strength.exp(), 2.1639534137386528488, epsilon = 1e-14);
        // The insertion constant with m = n equals the temporal coupling.
        assert_eq!(ins[0].strength, 2.0 * l.temporal_coupling);
    }

    #[test]
    fn insertion_lists_have_the_documented_shape() {
        let l = map_tfim(&chain(4, 1.0, 1.0, Boundary::Periodic, 2.0), 6).unwrap();
        let zz = insertion_for(&l, Observable::SzSz { site: 3 }, 2).unwrap();
        assert_eq!(zz.len(), 2);
        assert!(zz.iter().all(|i| i.kind == InsertionKind::Z && i.slice == 2));
        assert_eq!((zz[0].site, zz[1].site), (3, 0));

        let xx = insertion_for(&l, Observable::SxSx { site_a: 0, site_b: 2 }, 0).unwrap();
        assert_eq!(xx.len(), 2);
        assert!(xx.iter().all(|i| i.kind == InsertionKind::XBond));

        let yy = insertion_for(&l, Observable::SySy { site: 1 }, 5).unwrap();
        assert_eq!(yy.len(), 2);
        assert!(yy.iter().all(|i| i.kind == InsertionKind::YSpinBond && i.slice == 5));
        assert_eq!((yy[0].site, yy[1].site), (1, 2));

        let z = insertion_for(&l, Observable::Sz { site: 0 }, 0).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].strength, 0.0);
    }

    #[test]
    fn insertion_bounds_are_checked() {
        let l = map_tfim(&chain(3, 1.0, 1.0, Boundary::Open, 1.0), 4).unwrap();
        assert!(insertion_for(&l, Observable::Sx { site: 3 }, 0).is_err());
        assert!(insertion_for(&l, Observable::Sx { site: 0 }, 4).is_err());
        // No successor for the last open column.
        assert!(insertion_for(&l, Observable::SzSz { site: 2 }, 0).is_err());
        // Coincident sx sx sites are unsupported.
        let err = insertion_for(&l, Observable::SxSx { site_a: 1, site_b: 1 }, 0).unwrap_err();
        assert!(err.to_string().contains("unsupported"), "{err}");
    }

    #[test]
    fn transfer_element_is_symmetric_under_zero_field() {
        let c = solve_transfer_element(0.0, 1.3, Complex64::new(0.2, 0.0)).unwrap();
        assert_abs_diff_eq!(c.k.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn transfer_element_reconstructs_the_slice_exactly() {
        for eps in [
            Complex64::new(0.0, 0.1),
            Complex64::new(0.0, -0.7),
            Complex64::new(0.45, 0.0),
            Complex64::new(0.3, 0.2),
        ] {
            let c = solve_transfer_element(0.8, 1.1, eps).unwrap();
            let direct = qubit_slice_matrix(0.8, 1.1, eps);
            let dev = (&c.matrix() - &direct).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
            assert!(dev < 1e-14, "eps = {eps}: reconstruction off by {dev:.3e}");
        }
    }

    #[test]
    fn thermal_branch_gives_complex_prefactor() {
        // Real epsilon makes the off-diagonal entry negative, so the
        // principal log pushes a phase into A; reconstruction must not
        // suffer.
        let c = solve_transfer_element(1.0, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(c.a.im.abs() > 1e-3, "expected a complex prefactor, got {}", c.a);
        let m = c.matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, 0.8098846845999801849833, epsilon = 1e-13);
        assert_abs_diff_eq!(m[(1, 1)].re, 3.546482428617161542995, epsilon = 1e-13);
        assert_abs_diff_eq!(m[(0, 1)].re, -1.368298872008590679006, epsilon = 1e-13);
        assert_abs_diff_eq!(m[(0, 0)].im, 0.0, epsilon = 1e-13);
        assert!(c.branch_args[2].abs() > 3.0, "off-diagonal branch arg should record the sign");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert_eq!(
            solve_transfer_element(1.0, 0.0, Complex64::new(0.0, 0.1)).unwrap_err().exit_code(),
            3
        );
        assert!(solve_transfer_element(1.0, 1.0, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn single_slice_propagator_matches_frozen_oracle() {
        let u = qubit_chain_propagator(1.0, 1.0, 0.1, 1).unwrap();
        assert_abs_diff_eq!(u[(0, 0)].re, 0.9900166555595229278232, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(0, 0)].im, -0.09966699984131392496495, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(0, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(0, 1)].im, -0.09966699984131392496495, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(1, 1)].re, 0.9900166555595229278232, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(1, 1)].im, 0.09966699984131392496495, epsilon = 1e-15);
    }

    #[test]
    fn chain_contraction_is_exact_for_every_slice_count() {
        for t in [0.3, 1.0] {
            let direct = qubit_propagator_exact(1.0, 1.0, t);
            for m in [1, 2, 3, 7, 10, 64] {
                let chain = qubit_chain_propagator(1.0, 1.0, t, m).unwrap();
                let dev = (&chain - &direct).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
                assert!(dev < 1e-12, "t = {t}, m = {m}: deviation {dev:.3e}");
            }
        }
    }

    #[test]
    fn frozen_propagator_entries_at_larger_times() {
        let u = qubit_chain_propagator(1.0, 1.0, 0.3, 4).unwrap();
        assert_abs_diff_eq!(u[(0, 0)].re, 0.9113419259837137934628, epsilon = 1e-14);
        assert_abs_diff_eq!(u[(0, 0)].im, -0.2910806537235815073377, epsilon = 1e-14);
        let u = qubit_chain_propagator(1.0, 1.0, 1.0, 16).unwrap();
        assert_abs_diff_eq!(u[(0, 0)].re, 0.1559436947653744734546, epsilon = 1e-14);
        assert_abs_diff_eq!(u[(0, 1)].im, -0.6984559986366083598426, epsilon = 1e-14);
    }

    #[test]
    fn thermal_trace_matches_two_level_sum() {
        // tr exp(-H) with H = sz + sx: eigenvalues are +-sqrt(2).
        for m in [1, 2, 8, 32] {
            let z = qubit_thermal_trace(1.0, 1.0, 1.0, m).unwrap();
            assert_abs_diff_eq!(z.re, 4.356367113217141727978, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }
}
