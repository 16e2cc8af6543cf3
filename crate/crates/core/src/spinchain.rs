//! Exact dense quantum reference for transverse-field Ising chains.
//!
//! Everything classical in this crate is ultimately judged against the
//! operators built here: Hamiltonians are materialized as dense Hermitian
//! matrices, diagonalized in full, and queried for ground or thermal
//! correlation functions and two-site reduced density matrices.
//!
//! The chain Hamiltonian is
//!
//! ```text
//! H = -J * sum_j sz_j sz_{j+1}  -  B * sum_j sx_j
//! ```
//!
//! with the boundary bond included only for periodic chains. Dense
//! diagonalization caps the chain at [`DENSE_SITE_CAP`] sites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::TwoSiteDensity;
use crate::error::{Error, Module, Result};

/// Largest chain the dense solver accepts (2^10 = 1024 dimensional).
pub const DENSE_SITE_CAP: usize = 10;

/// Tolerance under which two eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Pauli matrices and small tensor-product helpers.
pub mod pauli {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn id2() -> DMatrix<Complex64> {
        DMatrix::identity(2, 2)
    }

    pub fn sx() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    /// sy = i * sx * sz, i.e. [[0, -i], [i, 0]].
    pub fn sy() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    pub fn sz() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    /// Embeds `op` (2x2) acting on `site` into an `m`-site chain.
    /// Site 0 is the leftmost tensor factor.
    pub fn site_op(op: &DMatrix<Complex64>, site: usize, m: usize) -> DMatrix<Complex64> {
        assert!(site < m, "site {site} out of range for {m} sites");
        let mut out = DMatrix::identity(1, 1);
        for j in 0..m {
            let factor = if j == site { op.clone() } else { id2() };
            out = out.kronecker(&factor);
        }
        out
    }

    /// Embeds `op_a` on `site_a` and `op_b` on `site_b` (distinct sites).
    pub fn two_site_op(
        op_a: &DMatrix<Complex64>,
        site_a: usize,
        op_b: &DMatrix<Complex64>,
        site_b: usize,
        m: usize,
    ) -> DMatrix<Complex64> {
        assert!(site_a != site_b, "sites must differ");
        let mut out = DMatrix::identity(1, 1);
        for j in 0..m {
            let factor = if j == site_a {
                op_a.clone()
            } else if j == site_b {
                op_b.clone()
            } else {
                id2()
            };
            out = out.kronecker(&factor);
        }
        out
    }
}

/// Chain boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// The quantum side of the correspondence: a transverse-field Ising
/// chain of `sites` spins at inverse temperature `beta`.
///
/// Units: `coupling_j` and `field_b` are energies, `beta` an inverse
/// energy; hbar and k_B are 1 throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumChainSpec {
    pub sites: usize,
    pub coupling_j: f64,
    pub field_b: f64,
    pub boundary: Boundary,
    pub beta: f64,
}

impl QuantumChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sites < 1 {
            return Err(Error::invalid(Module::Spinchain, "sites must be >= 1"));
        }
        if self.sites > DENSE_SITE_CAP {
            return Err(Error::capacity(
                Module::Spinchain,
                format!(
                    "{} sites exceed the dense cap of {DENSE_SITE_CAP}",
                    self.sites
                ),
            ));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(Module::Spinchain, "beta must be positive and finite"));
        }
        if !self.coupling_j.is_finite() || !self.field_b.is_finite() {
            return Err(Error::invalid(Module::Spinchain, "J and B must be finite"));
        }
        if self.boundary == Boundary::Periodic && self.sites < 3 {
            return Err(Error::invalid(
                Module::Spinchain,
                "periodic boundary requires at least 3 sites (a 2-site ring would double-count its bond)",
            ));
        }
        Ok(())
    }

    /// Site pairs coupled by the zz term.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let m = self.sites;
        match self.boundary {
            Boundary::Open => (0..m.saturating_sub(1)).map(|j| (j, j + 1)).collect(),
            Boundary::Periodic => (0..m).map(|j| (j, (j + 1) % m)).collect(),
        }
    }
}

/// Dense Hermitian matrix on a power-of-two dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Wraps a matrix, checking Hermiticity (1e-12) and that the
    /// dimension is a power of two.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n || !n.is_power_of_two() {
            return Err(Error::invalid(
                Module::Spinchain,
                format!("operator must be square with power-of-two dimension, got {n}x{}", matrix.ncols()),
            ));
        }
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                dev = dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if dev > 1e-12 {
            return Err(Error::numeric(
                Module::Spinchain,
                format!("matrix deviates from Hermiticity by {dev:.3e}"),
            ));
        }
        Ok(HermitianOperator { matrix })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of spin-1/2 sites, i.e. log2 of the dimension.
    pub fn sites(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Full eigendecomposition, eigenvalues ascending.
    fn eigen_sorted(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let n = self.matrix.nrows();
        let eig = nalgebra::linalg::SymmetricEigen::try_new(self.matrix.clone(), 1e-14, 0)
            .ok_or_else(|| {
                Error::numeric(
                    Module::Spinchain,
                    format!("eigensolver failed to converge on a {n}x{n} matrix"),
                )
            })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok((values, vectors))
    }
}

/// A pure or mixed state of the chain.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure {
        vector: DVector<Complex64>,
        energy: f64,
    },
    Thermal {
        rho: DMatrix<Complex64>,
        beta: f64,
    },
    /// Equal mixture over a degenerate ground space, flagged so callers
    /// know no symmetry-broken vector was chosen.
    DegenerateGround {
        rho: DMatrix<Complex64>,
        energy: f64,
        multiplicity: usize,
    },
}

impl QuantumState {
    pub fn dimension(&self) -> usize {
        match self {
            QuantumState::Pure { vector, .. } => vector.len(),
            QuantumState::Thermal { rho, .. } | QuantumState::DegenerateGround { rho, .. } => {
                rho.nrows()
            }
        }
    }

    pub fn sites(&self) -> usize {
        self.dimension().trailing_zeros() as usize
    }

    pub fn is_degenerate_ground(&self) -> bool {
        matches!(self, QuantumState::DegenerateGround { .. })
    }

    /// Density matrix view of the state (outer product for pure states).
    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        match self {
            QuantumState::Pure { vector, .. } => {
                let n = vector.len();
                DMatrix::from_fn(n, n, |i, j| vector[i] * vector[j].conj())
            }
            QuantumState::Thermal { rho, .. } | QuantumState::DegenerateGround { rho, .. } => {
                rho.clone()
            }
        }
    }

    /// Real expectation value of a Hermitian observable.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> f64 {
        match self {
            QuantumState::Pure { vector, .. } => {
                let applied = op * vector;
                vector.dotc(&applied).re
            }
            QuantumState::Thermal { rho, .. } | QuantumState::DegenerateGround { rho, .. } => {
                let n = rho.nrows();
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        acc += rho[(a, b)] * op[(b, a)];
                    }
                }
                acc.re
            }
        }
    }
}

/// Where a correlator set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "quantum-exact")]
    QuantumExact,
    #[serde(rename = "classical-enum")]
    ClassicalEnum,
    #[serde(rename = "classical-tm")]
    ClassicalTm,
    #[serde(rename = "classical-mc")]
    ClassicalMc,
}

impl Provenance {
    pub fn is_exact(self) -> bool {
        self != Provenance::ClassicalMc
    }
}

/// The nearest-neighbour correlators that survive the chain's Z2
/// symmetry: transverse magnetization and the three diagonal two-point
/// functions. This is the entire interface between the quantum and
/// classical sides.
///
/// `std_err` holds one-sigma errors for (m_x, c_x, c_y, c_z), all zero
/// unless the provenance is Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSet {
    pub m_x: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub c_z: f64,
    pub provenance: Provenance,
    pub std_err: [f64; 4],
}

impl CorrelatorSet {
    pub fn exact(m_x: f64, c_x: f64, c_y: f64, c_z: f64, provenance: Provenance) -> Self {
        CorrelatorSet { m_x, c_x, c_y, c_z, provenance, std_err: [0.0; 4] }
    }
}

/// Builds the dense TFIM Hamiltonian for `spec`.
pub fn build_tfim(spec: &QuantumChainSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let m = spec.sites;
    let dim = 1usize << m;
    // Bit j of a basis index holds site j, bit set meaning sz = -1.
    let z = |s: usize, j: usize| 1.0 - 2.0 * ((s >> j) & 1) as f64;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let bonds = spec.bonds();
    for s in 0..dim {
        let mut diag = 0.0;
        for &(a, b) in &bonds {
            diag -= spec.coupling_j * z(s, a) * z(s, b);
        }
        h[(s, s)] = Complex64::new(diag, 0.0);
        for j in 0..m {
            h[(s ^ (1 << j), s)] += Complex64::new(-spec.field_b, 0.0);
        }
    }
    HermitianOperator::new(h)
}

/// Ground state of `h`; a degenerate ground space (within
/// [`DEGENERACY_TOL`]) is returned as its equal mixture instead of an
/// arbitrary member vector.
pub fn ground_state(h: &HermitianOperator) -> Result<QuantumState> {
    let (values, vectors) = h.eigen_sorted()?;
    let e0 = values[0];
    let multiplicity = values.iter().take_while(|&&v| v - e0 <= DEGENERACY_TOL).count();
    if multiplicity == 1 {
        Ok(QuantumState::Pure { vector: vectors.column(0).into_owned(), energy: e0 })
    } else {
        let n = h.dimension();
        let mut rho = DMatrix::<Complex64>::zeros(n, n);
        let w = Complex64::new(1.0 / multiplicity as f64, 0.0);
        for k in 0..multiplicity {
            let v = vectors.column(k);
            for a in 0..n {
                for b in 0..n {
                    rho[(a, b)] += w * v[a] * v[b].conj();
                }
            }
        }
        Ok(QuantumState::DegenerateGround { rho, energy: e0, multiplicity })
    }
}

/// Thermal state e^{-beta H} / Z. The ground energy is subtracted
/// before exponentiation so large beta cannot overflow.
pub fn thermal_state(h: &HermitianOperator, beta: f64) -> Result<QuantumState> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(Module::Spinchain, "beta must be positive and finite"));
    }
    let (values, vectors) = h.eigen_sorted()?;
    let e0 = values[0];
    let weights: Vec<f64> = values.iter().map(|&v| (-(beta * (v - e0))).exp()).collect();
    let z: f64 = weights.iter().sum();
    let n = h.dimension();
    let mut rho = DMatrix::<Complex64>::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        let wz = Complex64::new(w / z, 0.0);
        for a in 0..n {
            for b in 0..n {
                rho[(a, b)] += wz * v[a] * v[b].conj();
            }
        }
    }
    Ok(QuantumState::Thermal { rho, beta })
}

/// Log partition function ln tr e^{-beta H}.
pub fn log_partition(h: &HermitianOperator, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(Module::Spinchain, "beta must be positive and finite"));
    }
    let (values, _) = h.eigen_sorted()?;
    let e0 = values[0];
    let sum: f64 = values.iter().map(|&v| (-(beta * (v - e0))).exp()).sum();
    Ok(-beta * e0 + sum.ln())
}

/// Checks that site `i` and its successor fit in `m` sites; the
/// successor wraps, so `i = m-1` pairs with site 0.
fn neighbour_pair(i: usize, m: usize) -> Result<(usize, usize)> {
    if m < 2 {
        return Err(Error::invalid(Module::Spinchain, "correlators need at least 2 sites"));
    }
    if i >= m {
        return Err(Error::invalid(
            Module::Spinchain,
            format!("site {i} out of range for {m} sites"),
        ));
    }
    Ok((i, (i + 1) % m))
}

/// Nearest-neighbour correlators of `state` at sites (i, i+1).
///
/// The zero pattern demanded by the chain's Z2 symmetry (vanishing
/// single-site sz and sy averages) is verified to 1e-10; states
/// violating it cannot be represented by a [`CorrelatorSet`] and are
/// rejected.
pub fn correlators(state: &QuantumState, i: usize) -> Result<CorrelatorSet> {
    let m = state.sites();
    let (a, b) = neighbour_pair(i, m)?;
    let sx = pauli::sx();
    let sy = pauli::sy();
    let sz = pauli::sz();

    let mx_a = state.expectation(&pauli::site_op(&sx, a, m));
    let mx_b = state.expectation(&pauli::site_op(&sx, b, m));
    let c_x = state.expectation(&pauli::two_site_op(&sx, a, &sx, b, m));
    let c_y = state.expectation(&pauli::two_site_op(&sy, a, &sy, b, m));
    let c_z = state.expectation(&pauli::two_site_op(&sz, a, &sz, b, m));

    for (label, op_site) in [("sz", &sz), ("sy", &sy)] {
        for &site in &[a, b] {
            let v = state.expectation(&pauli::site_op(op_site, site, m));
            if v.abs() > 1e-10 {
                return Err(Error::numeric(
                    Module::Spinchain,
                    format!(
                        "<{label}_{site}> = {v:.3e} breaks the Z2 zero pattern; \
                         the correlator set cannot represent this state"
                    ),
                ));
            }
        }
    }
    if (mx_a - mx_b).abs() > 1e-10 {
        log::debug!(
            "transverse magnetization differs across the pair ({mx_a:.6e} vs {mx_b:.6e}); storing the average"
        );
    }

    Ok(CorrelatorSet::exact(0.5 * (mx_a + mx_b), c_x, c_y, c_z, Provenance::QuantumExact))
}

/// Reduced density matrix of the pair (i, i+1), site i being the first
/// tensor factor. Partial trace over every other site.
pub fn two_site_rdm(state: &QuantumState, i: usize) -> Result<TwoSiteDensity> {
    let m = state.sites();
    let (p, q) = neighbour_pair(i, m)?;
    let rho = state.density_matrix();
    let rest_sites: Vec<usize> = (0..m).filter(|&s| s != p && s != q).collect();
    let rest_dim = 1usize << rest_sites.len();

    // Assembles a full basis index from pair values and the rest index.
    let full_index = |a1: usize, a2: usize, rest: usize| -> usize {
        let mut idx = (a1 << p) | (a2 << q);
        for (k, &site) in rest_sites.iter().enumerate() {
            idx |= ((rest >> k) & 1) << site;
        }
        idx
    };

    let mut red = DMatrix::<Complex64>::zeros(4, 4);
    for a1 in 0..2 {
        for a2 in 0..2 {
            for b1 in 0..2 {
                for b2 in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for rest in 0..rest_dim {
                        acc += rho[(full_index(a1, a2, rest), full_index(b1, b2, rest))];
                    }
                    // First factor = site i = high bit of the 4d index.
                    red[(2 * a1 + a2, 2 * b1 + b2)] = acc;
                }
            }
        }
    }
    TwoSiteDensity::validated(red, Provenance::QuantumExact, 1e-10, Module::Spinchain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(sites: usize, j: f64, b: f64, boundary: Boundary, beta: f64) -> QuantumChainSpec {
        QuantumChainSpec { sites, coupling_j: j, field_b: b, boundary, beta }
    }

    #[test]
    fn single_site_is_minus_field_times_sx() {
        let h = build_tfim(&spec(1, 3.7, 1.0, Boundary::Open, 1.0)).unwrap();
        let expect = pauli::sx() * Complex64::new(-1.0, 0.0);
        assert_eq!(h.matrix(), &expect);
    }

    #[test]
    fn two_site_classical_hamiltonian_is_diagonal_zz() {
        let h = build_tfim(&spec(2, 1.0, 0.0, Boundary::Open, 1.0)).unwrap();
        let expect = pauli::two_site_op(&pauli::sz(), 0, &pauli::sz(), 1, 2)
            * Complex64::new(-1.0, 0.0);
        assert_eq!(h.matrix(), &expect);
        let (values, _) = h.eigen_sorted().unwrap();
        assert_abs_diff_eq!(values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(values[1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(values[2], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(values[3], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn three_site_ring_ground_energy_is_minus_four() {
        // J = B = 1 periodic ring of 3: the 8x8 spectrum is exact.
        let h = build_tfim(&spec(3, 1.0, 1.0, Boundary::Periodic, 1.0)).unwrap();
        match ground_state(&h).unwrap() {
            QuantumState::Pure { energy, .. } => assert_abs_diff_eq!(energy, -4.0, epsilon = 1e-12),
            other => panic!("expected a unique ground state, got {other:?}"),
        }
    }

    #[test]
    fn open_pair_ground_energy_is_minus_sqrt_five() {
        let h = build_tfim(&spec(2, 1.0, 1.0, Boundary::Open, 1.0)).unwrap();
        match ground_state(&h).unwrap() {
            QuantumState::Pure { energy, .. } => {
                assert_abs_diff_eq!(energy, -2.2360679774997896964, epsilon = 1e-12)
            }
            other => panic!("expected a unique ground state, got {other:?}"),
        }
    }

    #[test]
    fn pure_field_ground_state_is_plus() {
        let h = HermitianOperator::new(pauli::sx() * Complex64::new(-1.0, 0.0)).unwrap();
        match ground_state(&h).unwrap() {
            QuantumState::Pure { vector, energy } => {
                assert_abs_diff_eq!(energy, -1.0, epsilon = 1e-14);
                let overlap = (vector[0] + vector[1]).norm() / 2f64.sqrt();
                assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
            }
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn classical_pair_ground_space_is_symmetrized() {
        let h = build_tfim(&spec(2, 1.0, 0.0, Boundary::Open, 1.0)).unwrap();
        let state = ground_state(&h).unwrap();
        match &state {
            QuantumState::DegenerateGround { rho, energy, multiplicity } => {
                assert_eq!(*multiplicity, 2);
                assert_abs_diff_eq!(*energy, -1.0, epsilon = 1e-14);
                // Equal mixture of |00> and |11>.
                assert_abs_diff_eq!(rho[(0, 0)].re, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(rho[(3, 3)].re, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(rho[(0, 3)].norm(), 0.0, epsilon = 1e-12);
            }
            other => panic!("expected degenerate ground, got {other:?}"),
        }
        let c = correlators(&state, 0).unwrap();
        assert_abs_diff_eq!(c.c_z, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.m_x, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn infinite_temperature_limit_is_maximally_mixed() {
        let h = build_tfim(&spec(2, 1.0, 1.0, Boundary::Open, 1.0)).unwrap();
        let state = thermal_state(&h, 1e-12).unwrap();
        let rho = state.density_matrix();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 0.25 } else { 0.0 };
                assert_abs_diff_eq!(rho[(a, b)].re, expect, epsilon = 1e-10);
                assert_abs_diff_eq!(rho[(a, b)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn thermal_zz_pair_gives_tanh_beta() {
        // H = -sz sz at beta = 1: <sz sz> = tanh(1) by the 4-level sum.
        let h = build_tfim(&spec(2, 1.0, 0.0, Boundary::Open, 1.0)).unwrap();
        let state = thermal_state(&h, 1.0).unwrap();
        let c = correlators(&state, 0).unwrap();
        assert_abs_diff_eq!(c.c_z, 0.76159415595576488812, epsilon = 1e-13);
        assert_abs_diff_eq!(c.m_x, 0.0, epsilon = 1e-13);
        assert_eq!(c.provenance, Provenance::QuantumExact);
        assert_eq!(c.std_err, [0.0; 4]);
    }

    #[test]
    fn large_beta_thermal_matches_ground() {
        let h = build_tfim(&spec(2, 1.0, 1.0, Boundary::Open, 1.0)).unwrap();
        // Gap is 2*sqrt(5) - 2*1 ~ 1.24, so beta = 40 is far past betaE = 10.
        let thermal = correlators(&thermal_state(&h, 40.0).unwrap(), 0).unwrap();
        let ground = correlators(&ground_state(&h).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(thermal.m_x, ground.m_x, epsilon = 1e-12);
        assert_abs_diff_eq!(thermal.c_x, ground.c_x, epsilon = 1e-12);
        assert_abs_diff_eq!(thermal.c_y, ground.c_y, epsilon = 1e-12);
        assert_abs_diff_eq!(thermal.c_z, ground.c_z, epsilon = 1e-12);
    }

    #[test]
    fn product_state_correlators() {
        // J = 0: ground state is |+...+>.
        let h = build_tfim(&spec(3, 0.0, 1.0, Boundary::Open, 1.0)).unwrap();
        let c = correlators(&ground_state(&h).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(c.m_x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c_x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c_y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c_z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn translation_invariance_on_a_ring() {
        let h = build_tfim(&spec(5, 1.3, 0.8, Boundary::Periodic, 1.0)).unwrap();
        let state = thermal_state(&h, 2.0).unwrap();
        let base = correlators(&state, 0).unwrap();
        for i in 1..5 {
            let c = correlators(&state, i).unwrap();
            assert_abs_diff_eq!(c.m_x, base.m_x, epsilon = 1e-10);
            assert_abs_diff_eq!(c.c_x, base.c_x, epsilon = 1e-10);
            assert_abs_diff_eq!(c.c_y, base.c_y, epsilon = 1e-10);
            assert_abs_diff_eq!(c.c_z, base.c_z, epsilon = 1e-10);
        }
    }

    #[test]
    fn product_plus_rdm_is_rank_one_projector() {
        let h = build_tfim(&spec(2, 0.0, 1.0, Boundary::Open, 1.0)).unwrap();
        let rdm = two_site_rdm(&ground_state(&h).unwrap(), 0).unwrap();
        let m = rdm.matrix();
        for a in 0..4 {
            for b in 0..4 {
                assert_abs_diff_eq!(m[(a, b)].re, 0.25, epsilon = 1e-12);
                assert_abs_diff_eq!(m[(a, b)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bell_state_rdm_is_bell_projector() {
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut v = DVector::<Complex64>::zeros(4);
        v[0] = amp;
        v[3] = amp;
        let state = QuantumState::Pure { vector: v, energy: 0.0 };
        let rdm = two_site_rdm(&state, 0).unwrap();
        let m = rdm.matrix();
        for (idx, expect) in [((0, 0), 0.5), ((0, 3), 0.5), ((3, 0), 0.5), ((3, 3), 0.5)] {
            assert_abs_diff_eq!(m[idx].re, expect, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(m[(1, 1)].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(2, 2)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn log_partition_matches_two_level_sum() {
        // Single site, H = -B sx: Z = 2 cosh(beta B).
        let h = build_tfim(&spec(1, 0.0, 1.3, Boundary::Open, 1.0)).unwrap();
        let lz = log_partition(&h, 0.7).unwrap();
        assert_abs_diff_eq!(lz, (2.0 * (0.7f64 * 1.3).cosh()).ln(), epsilon = 1e-13);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert_eq!(
            spec(0, 1.0, 1.0, Boundary::Open, 1.0).validate().unwrap_err().exit_code(),
            2
        );
        assert_eq!(
            spec(11, 1.0, 1.0, Boundary::Open, 1.0).validate().unwrap_err().exit_code(),
            3
        );
        assert_eq!(
            spec(2, 1.0, 1.0, Boundary::Periodic, 1.0).validate().unwrap_err().exit_code(),
            2
        );
        assert_eq!(
            spec(3, 1.0, 1.0, Boundary::Open, -1.0).validate().unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn correlator_site_range_is_checked() {
        let h = build_tfim(&spec(3, 1.0, 1.0, Boundary::Open, 1.0)).unwrap();
        let state = ground_state(&h).unwrap();
        assert!(correlators(&state, 3).is_err());
        assert!(correlators(&state, 2).is_ok());
    }
}
