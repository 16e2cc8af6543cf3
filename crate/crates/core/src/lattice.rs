//! Exact evaluation of classical lattices: exhaustive enumeration for
//! small systems, row transfer matrices for medium ones.
//!
//! Both evaluators work on a [`ClassicalLatticeSpec`] and agree to
//! 1e-12 relative wherever their domains overlap; that redundancy is
//! the crate's primary internal oracle. All arithmetic that could
//! overflow at large couplings runs in the log domain.
//!
//! Lattice sites are addressed as (column, row) with linear index
//! `row * columns + column`. The time direction (rows) always wraps;
//! a single-row lattice therefore carries one self-bond per column,
//! contributing a constant coupling per column to every configuration.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::trotter::{ClassicalLatticeSpec, InsertionKind, InsertionSpec};

/// Default enumeration cap in spins, overridable through the
/// `BRIDGE_MAX_SPINS` environment variable.
pub const ENUM_SPIN_CAP_DEFAULT: usize = 24;

/// Hard ceiling for the enumeration cap override.
pub const ENUM_SPIN_CAP_MAX: usize = 28;

/// Transfer-matrix column cap (row matrices are 2^columns square).
pub const TRANSFER_COLUMN_CAP: usize = 12;

/// Environment variable that widens or narrows the enumeration cap.
pub const ENUM_CAP_ENV: &str = "BRIDGE_MAX_SPINS";

/// Current enumeration cap: `BRIDGE_MAX_SPINS` clamped into
/// [1, 28], or the default 24 when unset or unparsable.
pub fn enumeration_cap() -> usize {
    match std::env::var(ENUM_CAP_ENV) {
        Err(_) => ENUM_SPIN_CAP_DEFAULT,
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(v) => {
                let clamped = v.clamp(1, ENUM_SPIN_CAP_MAX);
                if clamped != v {
                    log::warn!("{ENUM_CAP_ENV}={v} clamped to {clamped}");
                }
                clamped
            }
            Err(_) => {
                log::warn!("ignoring unparsable {ENUM_CAP_ENV}={raw:?}; using {ENUM_SPIN_CAP_DEFAULT}");
                ENUM_SPIN_CAP_DEFAULT
            }
        },
    }
}

/// One spin per lattice site, packed; bit clear means spin up (+1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    words: Vec<u64>,
    len: usize,
}

impl SpinConfiguration {
    pub fn all_up(len: usize) -> Self {
        SpinConfiguration { words: vec![0; len.div_ceil(64)], len }
    }

    /// Unpacks the low `len` bits of `index` (enumeration order).
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "index form only covers 64 spins");
        let mut c = Self::all_up(len);
        if len > 0 {
            c.words[0] = index & (u64::MAX >> (64 - len));
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Spin value +-1 at linear site `idx`.
    pub fn spin(&self, idx: usize) -> f64 {
        debug_assert!(idx < self.len);
        1.0 - 2.0 * ((self.words[idx / 64] >> (idx % 64)) & 1) as f64
    }

    pub fn flip(&mut self, idx: usize) {
        debug_assert!(idx < self.len);
        self.words[idx / 64] ^= 1 << (idx % 64);
    }
}

/// Evaluation method for expectations and partition functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "enum")]
    Enumeration,
    #[serde(rename = "transfer-matrix")]
    TransferMatrix,
}

/// Result of an exact lattice evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeObservableResult {
    pub value: f64,
    pub log_partition: f64,
    pub method: Method,
}

/// A coupled pair of linear site indices. Self-pairs (a == b) arise on
/// single-row lattices and contribute their coupling unconditionally.
#[derive(Debug, Clone, Copy)]
pub struct Bond {
    pub a: u32,
    pub b: u32,
    pub coupling: f64,
}

/// Every bond of the lattice, spatial then temporal, in a fixed order.
pub fn bonds(lattice: &ClassicalLatticeSpec) -> Vec<Bond> {
    let m = lattice.columns;
    let n = lattice.rows;
    let idx = |col: usize, row: usize| (row * m + col) as u32;
    let mut out = Vec::with_capacity(lattice.bond_count());
    let spatial = lattice.spatial_bond_columns();
    for row in 0..n {
        for &(ja, jb) in &spatial {
            out.push(Bond { a: idx(ja, row), b: idx(jb, row), coupling: lattice.spatial_coupling });
        }
    }
    for row in 0..n {
        for col in 0..m {
            out.push(Bond {
                a: idx(col, row),
                b: idx(col, (row + 1) % n),
                coupling: lattice.temporal_coupling,
            });
        }
    }
    out
}

/// For each site, the incident bonds as (neighbour, coupling); self
/// bonds are omitted because they never change under a flip.
pub fn neighbour_table(lattice: &ClassicalLatticeSpec) -> Vec<Vec<(u32, f64)>> {
    let mut table = vec![Vec::new(); lattice.spins()];
    for bond in bonds(lattice) {
        if bond.a == bond.b {
            continue;
        }
        table[bond.a as usize].push((bond.b, bond.coupling));
        table[bond.b as usize].push((bond.a, bond.coupling));
    }
    table
}

/// Configuration energy E = sum over bonds of c * s_a * s_b; the
/// Boltzmann weight is exp(E).
pub fn config_energy(config: &SpinConfiguration, bonds: &[Bond]) -> f64 {
    let mut e = 0.0;
    for bond in bonds {
        e += bond.coupling * config.spin(bond.a as usize) * config.spin(bond.b as usize);
    }
    e
}

/// Neumaier-compensated accumulator, used everywhere a deterministic
/// sum to near machine precision is needed.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

fn check_real_spins(lattice: &ClassicalLatticeSpec, need: Option<&str>) -> Result<()> {
    lattice.validate().map_err(|e| match e {
        Error::Invalid { message, .. } => Error::invalid(Module::Lattice, message),
        other => other,
    })?;
    if let Some(what) = need {
        log::trace!("evaluating {what} on a {}x{} lattice", lattice.columns, lattice.rows);
    }
    Ok(())
}

fn enum_cap_check(lattice: &ClassicalLatticeSpec) -> Result<()> {
    let cap = enumeration_cap();
    if lattice.spins() > cap {
        return Err(Error::capacity(
            Module::Lattice,
            format!(
                "{} spins exceed the enumeration cap of {cap} (raise {ENUM_CAP_ENV} up to {ENUM_SPIN_CAP_MAX})",
                lattice.spins()
            ),
        ));
    }
    Ok(())
}

fn transfer_cap_check(lattice: &ClassicalLatticeSpec) -> Result<()> {
    if lattice.columns > TRANSFER_COLUMN_CAP {
        return Err(Error::capacity(
            Module::Lattice,
            format!(
                "{} columns exceed the transfer-matrix cap of {TRANSFER_COLUMN_CAP}",
                lattice.columns
            ),
        ));
    }
    Ok(())
}

/// Fixed-stride partition of the configuration space: the chunk
/// boundaries depend only on the spin count, so parallel reductions
/// are bit-stable for any worker count.
fn chunk_plan(spins: usize) -> (u64, u64) {
    let total: u64 = 1 << spins;
    let chunks: u64 = if spins <= 16 { 1 } else { 1 << 10 };
    (chunks, total / chunks)
}

/// Sum of W(config) * exp(E(config) - shift) over all configurations,
/// evaluated chunk-parallel with an ordered deterministic merge.
fn enumerate_weighted_sum<W>(lattice: &ClassicalLatticeSpec, shift: f64, weight: W) -> f64
where
    W: Fn(&SpinConfiguration) -> f64 + Sync,
{
    let spins = lattice.spins();
    let bond_list = bonds(lattice);
    let (chunks, chunk_len) = chunk_plan(spins);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = Kahan::default();
            let start = chunk * chunk_len;
            for index in start..start + chunk_len {
                let config = SpinConfiguration::from_index(spins, index);
                let e = config_energy(&config, &bond_list);
                acc.add(weight(&config) * (e - shift).exp());
            }
            acc.total()
        })
        .collect();
    let mut total = Kahan::default();
    for p in partials {
        total.add(p);
    }
    total.total()
}

fn max_energy(lattice: &ClassicalLatticeSpec) -> f64 {
    let spins = lattice.spins();
    let bond_list = bonds(lattice);
    let (chunks, chunk_len) = chunk_plan(spins);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * chunk_len;
            let mut best = f64::NEG_INFINITY;
            for index in start..start + chunk_len {
                let config = SpinConfiguration::from_index(spins, index);
                best = best.max(config_energy(&config, &bond_list));
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Log partition function by exhaustive enumeration (log-sum-exp
/// stabilized). Excludes the lattice log-prefactor, which is reported
/// separately by [`free_energy`].
pub fn enumerate_log_z(lattice: &ClassicalLatticeSpec) -> Result<f64> {
    check_real_spins(lattice, Some("enumerate_log_z"))?;
    enum_cap_check(lattice)?;
    let shift = max_energy(lattice);
    let total = enumerate_weighted_sum(lattice, shift, |_| 1.0);
    Ok(shift + total.ln())
}

/// Row transfer matrix pieces: diagonal intra-row part D and inter-row
/// part V, kept as exponent shifts plus bounded matrices.
struct TransferPieces {
    /// exp(spatial exponent - d_shift) per row state.
    d: Vec<f64>,
    d_shift: f64,
    /// exp(temporal exponent - v_shift), dense (dim x dim).
    v: DMatrix<f64>,
    v_shift: f64,
    dim: usize,
}

fn transfer_pieces(lattice: &ClassicalLatticeSpec) -> TransferPieces {
    let m = lattice.columns;
    let dim = 1usize << m;
    let z = |s: usize, j: usize| 1.0 - 2.0 * ((s >> j) & 1) as f64;
    let spatial = lattice.spatial_bond_columns();
    let ks = lattice.spatial_coupling;
    let kt = lattice.temporal_coupling;

    let d_shift = ks.abs() * spatial.len() as f64;
    let d: Vec<f64> = (0..dim)
        .map(|s| {
            let zz: f64 = spatial.iter().map(|&(a, b)| z(s, a) * z(s, b)).sum();
            (ks * zz - d_shift).exp()
        })
        .collect();

    let v_shift = kt.abs() * m as f64;
    let mut v = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..dim {
        for sp in 0..dim {
            let agree = m as i32 - 2 * (s ^ sp).count_ones() as i32;
            v[(s, sp)] = (kt * agree as f64 - v_shift).exp();
        }
    }
    TransferPieces { d, d_shift, v, v_shift, dim }
}

/// Symmetrized transfer matrix T = D^(1/2) V D^(1/2); entrywise
/// nonnegative, so traces of its powers involve no cancellation.
fn symmetrized_transfer(p: &TransferPieces) -> DMatrix<f64> {
    let sqrt_d: Vec<f64> = p.d.iter().map(|&x| x.sqrt()).collect();
    let mut t = p.v.clone();
    for s in 0..p.dim {
        for sp in 0..p.dim {
            t[(s, sp)] *= sqrt_d[s] * sqrt_d[sp];
        }
    }
    t
}

/// T^power by renormalized binary exponentiation: returns (P, s) with
/// T^power = P * exp(s). Keeping every product entrywise nonnegative
/// sidesteps the cancellation that a signed eigenvalue-power sum
/// suffers when strong negative couplings make the spectrum nearly
/// symmetric.
fn matrix_power_scaled(t: &DMatrix<f64>, power: usize) -> Result<(DMatrix<f64>, f64)> {
    debug_assert!(power >= 1);
    let renorm = |p: DMatrix<f64>, log: f64| -> Result<(DMatrix<f64>, f64)> {
        let s = p.amax();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::numeric(
                Module::Lattice,
                "transfer-matrix power lost its scale (couplings too extreme)",
            ));
        }
        let mut p = p;
        p.unscale_mut(s);
        Ok((p, log + s.ln()))
    };
    let mut base = t.clone();
    let mut base_log = 0.0;
    let mut acc: Option<(DMatrix<f64>, f64)> = None;
    let mut k = power;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => (base.clone(), base_log),
                Some((r, rl)) => renorm(&r * &base, rl + base_log)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        let (sq, sq_log) = renorm(&base * &base, 2.0 * base_log)?;
        base = sq;
        base_log = sq_log;
    }
    Ok(acc.expect("power >= 1"))
}

/// Sum over (i, j) of a[(i, j)] * b[(j, i)], i.e. tr(a b), compensated.
fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut acc = Kahan::default();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc.add(a[(i, j)] * b[(j, i)]);
        }
    }
    acc.total()
}

/// Log partition function by transfer-matrix contraction.
pub fn transfer_log_z(lattice: &ClassicalLatticeSpec) -> Result<f64> {
    check_real_spins(lattice, Some("transfer_log_z"))?;
    transfer_cap_check(lattice)?;
    let n = lattice.rows;
    let p = transfer_pieces(lattice);
    let shift = n as f64 * (p.d_shift + p.v_shift);
    if n == 1 {
        // tr(D V): exact single-row trace, no matrix product at all.
        let mut acc = Kahan::default();
        for s in 0..p.dim {
            acc.add(p.d[s] * p.v[(s, s)]);
        }
        return Ok(shift + acc.total().ln());
    }
    let t = symmetrized_transfer(&p);
    let (pw, pw_log) = matrix_power_scaled(&t, n - 1)?;
    let trace = trace_product(&pw, &t);
    if !(trace > 0.0) {
        return Err(Error::numeric(
            Module::Lattice,
            "trace of the transfer-matrix power came out non-positive",
        ));
    }
    Ok(shift + pw_log + trace.ln())
}

/// Insertion list after validation: bounds checked, y-type bonds
/// paired, and the touched slices collected.
pub(crate) struct CheckedInsertions<'a> {
    pub list: &'a [InsertionSpec],
    pub y_pairs: usize,
    pub slices: Vec<usize>,
}

pub(crate) fn check_insertions<'a>(
    lattice: &ClassicalLatticeSpec,
    insertions: &'a [InsertionSpec],
) -> Result<CheckedInsertions<'a>> {
    let mut y_count = 0usize;
    let mut slices: Vec<usize> = Vec::new();
    for ins in insertions {
        if ins.site >= lattice.columns || ins.slice >= lattice.rows {
            return Err(Error::invalid(
                Module::Lattice,
                format!(
                    "insertion at (site {}, slice {}) is outside a {}x{} lattice",
                    ins.site, ins.slice, lattice.columns, lattice.rows
                ),
            ));
        }
        if !ins.strength.is_finite() {
            return Err(Error::invalid(Module::Lattice, "insertion strength must be finite"));
        }
        if ins.kind == InsertionKind::YSpinBond {
            y_count += 1;
        }
        if !slices.contains(&ins.slice) {
            slices.push(ins.slice);
        }
    }
    if y_count % 2 != 0 {
        return Err(Error::invalid(
            Module::Lattice,
            "y-type insertions only make sense in pairs (their phases cancel pairwise)",
        ));
    }
    Ok(CheckedInsertions { list: insertions, y_pairs: y_count / 2, slices })
}

/// Product of insertion factors for one configuration, with slices
/// cyclically shifted by `offset`. `spin(column, row)` supplies spin
/// values. Each y-type pair contributes a factor -1 on top of its two
/// bond factors (sign read on the later slice).
pub(crate) fn insertion_product<F>(
    lattice: &ClassicalLatticeSpec,
    checked: &CheckedInsertions<'_>,
    offset: usize,
    spin: F,
) -> f64
where
    F: Fn(usize, usize) -> f64,
{
    let n = lattice.rows;
    let mut w = if checked.y_pairs % 2 == 1 { -1.0 } else { 1.0 };
    for ins in checked.list {
        let row = (ins.slice + offset) % n;
        match ins.kind {
            InsertionKind::Z => {
                w *= spin(ins.site, row);
            }
            InsertionKind::XBond => {
                let s0 = spin(ins.site, row);
                let s1 = spin(ins.site, (row + 1) % n);
                w *= (-ins.strength * s0 * s1).exp();
            }
            InsertionKind::YSpinBond => {
                let s0 = spin(ins.site, row);
                let s1 = spin(ins.site, (row + 1) % n);
                w *= s1 * (-ins.strength * s0 * s1).exp();
            }
        }
    }
    w
}

fn expectation_enum(
    lattice: &ClassicalLatticeSpec,
    checked: &CheckedInsertions<'_>,
) -> Result<(f64, f64)> {
    enum_cap_check(lattice)?;
    let m = lattice.columns;
    let shift = max_energy(lattice);
    let denom = enumerate_weighted_sum(lattice, shift, |_| 1.0);
    let numer = enumerate_weighted_sum(lattice, shift, |config| {
        insertion_product(lattice, checked, 0, |col, row| config.spin(row * m + col))
    });
    Ok((numer / denom, shift + denom.ln()))
}

fn expectation_transfer(
    lattice: &ClassicalLatticeSpec,
    checked: &CheckedInsertions<'_>,
) -> Result<(f64, f64)> {
    transfer_cap_check(lattice)?;
    if checked.slices.len() > 1 {
        return Err(Error::invalid(
            Module::Lattice,
            "the transfer-matrix method evaluates insertions on a single slice; use the enum method for multi-slice lists",
        ));
    }
    let n = lattice.rows;
    let p = transfer_pieces(lattice);
    let z = |s: usize, j: usize| 1.0 - 2.0 * ((s >> j) & 1) as f64;

    // Diagonal spin reads and modified inter-row factors at the
    // insertion slice. In tr(... D S V_mod ...) the first V index is
    // the earlier row, the second the later one.
    let mut s_diag = vec![1.0; p.dim];
    let mut v_mod = p.v.clone();
    let mut modified = false;
    for ins in checked.list {
        match ins.kind {
            InsertionKind::Z => {
                for (s, slot) in s_diag.iter_mut().enumerate() {
                    *slot *= z(s, ins.site);
                }
            }
            InsertionKind::XBond | InsertionKind::YSpinBond => {
                modified = true;
                for s in 0..p.dim {
                    for sp in 0..p.dim {
                        let mut f = (-ins.strength * z(s, ins.site) * z(sp, ins.site)).exp();
                        if ins.kind == InsertionKind::YSpinBond {
                            f *= z(sp, ins.site);
                        }
                        v_mod[(s, sp)] *= f;
                    }
                }
            }
        }
    }
    let _ = modified;

    let sqrt_d: Vec<f64> = p.d.iter().map(|&x| x.sqrt()).collect();
    // W = D^(1/2) S V_mod D^(1/2); the expectation is
    // tr(T^(n-1) W) / tr(T^n) with T the symmetrized transfer matrix.
    let mut w = v_mod;
    for s in 0..p.dim {
        for sp in 0..p.dim {
            w[(s, sp)] *= sqrt_d[s] * s_diag[s] * sqrt_d[sp];
        }
    }
    if checked.y_pairs % 2 == 1 {
        w.neg_mut();
    }

    let t = symmetrized_transfer(&p);
    let shift = n as f64 * (p.d_shift + p.v_shift);
    let (numer, denom, pw_log) = if n == 1 {
        (w.trace(), t.trace(), 0.0)
    } else {
        let (pw, pw_log) = matrix_power_scaled(&t, n - 1)?;
        (trace_product(&pw, &w), trace_product(&pw, &t), pw_log)
    };
    if !(denom > 0.0) {
        return Err(Error::numeric(
            Module::Lattice,
            "transfer-matrix normalization came out non-positive",
        ));
    }
    let value = numer / denom;
    let log_z = shift + pw_log + denom.ln();
    Ok((value, log_z))
}

/// Boltzmann expectation of the product of insertion factors.
pub fn expectation(
    lattice: &ClassicalLatticeSpec,
    insertions: &[InsertionSpec],
    method: Method,
) -> Result<LatticeObservableResult> {
    check_real_spins(lattice, Some("expectation"))?;
    let checked = check_insertions(lattice, insertions)?;
    let (value, log_partition) = match method {
        Method::Enumeration => expectation_enum(lattice, &checked)?,
        Method::TransferMatrix => expectation_transfer(lattice, &checked)?,
    };
    Ok(LatticeObservableResult { value, log_partition, method })
}

/// Free energy in the originating quantum units:
/// F = -(log_prefactor + log Z) / beta. Picks the transfer matrix when
/// the columns fit its cap, falling back to enumeration.
pub fn free_energy(lattice: &ClassicalLatticeSpec) -> Result<f64> {
    let method = if lattice.columns <= TRANSFER_COLUMN_CAP {
        Method::TransferMatrix
    } else {
        Method::Enumeration
    };
    free_energy_with(lattice, method)
}

/// Maps a chain at Trotter resolution `n` and reads all four
/// nearest-neighbour correlators of the pair (0, 1) off the lattice.
pub fn classical_correlators(
    chain: &crate::spinchain::QuantumChainSpec,
    n: usize,
    method: Method,
) -> Result<crate::spinchain::CorrelatorSet> {
    use crate::spinchain::{CorrelatorSet, Provenance};
    use crate::trotter::{insertion_for, map_tfim, Observable};
    if chain.sites < 2 {
        return Err(Error::invalid(
            Module::Lattice,
            "nearest-neighbour correlators need at least two sites",
        ));
    }
    let lattice = map_tfim(chain, n)?;
    let mut values = [0.0; 4];
    let observables = [
        Observable::Sx { site: 0 },
        Observable::SxSx { site_a: 0, site_b: 1 },
        Observable::SySy { site: 0 },
        Observable::SzSz { site: 0 },
    ];
    for (slot, observable) in values.iter_mut().zip(observables) {
        let ins = insertion_for(&lattice, observable, 0)?;
        *slot = expectation(&lattice, &ins, method)?.value;
    }
    let provenance = match method {
        Method::Enumeration => Provenance::ClassicalEnum,
        Method::TransferMatrix => Provenance::ClassicalTm,
    };
    Ok(CorrelatorSet::exact(values[0], values[1], values[2], values[3], provenance))
}

/// [`free_energy`] with an explicit method choice.
pub fn free_energy_with(lattice: &ClassicalLatticeSpec, method: Method) -> Result<f64> {
    check_real_spins(lattice, Some("free_energy"))?;
    let beta = lattice.beta.ok_or_else(|| {
        Error::invalid(
            Module::Lattice,
            "free energy needs the beta context carried by mapped lattices",
        )
    })?;
    let log_z = match method {
        Method::Enumeration => enumerate_log_z(lattice)?,
        Method::TransferMatrix => transfer_log_z(lattice)?,
    };
    Ok(-(lattice.log_prefactor + log_z) / beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinchain::{Boundary, QuantumChainSpec};
    use crate::trotter::{insertion_for, map_tfim, Observable, TimeBoundary};
    use approx::assert_abs_diff_eq;

    fn raw_lattice(
        columns: usize,
        rows: usize,
        spatial: f64,
        temporal: f64,
        boundary_space: Boundary,
    ) -> ClassicalLatticeSpec {
        ClassicalLatticeSpec {
            columns,
            rows,
            spatial_coupling: spatial,
            temporal_coupling: temporal,
            log_prefactor: 0.0,
            boundary_space,
            boundary_time: TimeBoundary::Periodic,
            beta: None,
        }
    }

    fn chain(sites: usize, j: f64, b: f64, boundary: Boundary, beta: f64) -> QuantumChainSpec {
        QuantumChainSpec { sites, coupling_j: j, field_b: b, boundary, beta }
    }

    #[test]
    fn spin_configuration_packs_and_flips() {
        let mut c = SpinConfiguration::from_index(5, 0b10110);
        assert_eq!(c.len(), 5);
        let spins: Vec<f64> = (0..5).map(|i| c.spin(i)).collect();
        assert_eq!(spins, vec![1.0, -1.0, -1.0, 1.0, -1.0]);
        c.flip(0);
        assert_eq!(c.spin(0), -1.0);
        c.flip(0);
        assert_eq!(c.spin(0), 1.0);
        let big = SpinConfiguration::all_up(130);
        assert_eq!(big.spin(129), 1.0);
    }

    #[test]
    fn three_ring_partition_function() {
        // Single column, three rows, temporal coupling 1:
        // Z = (2 cosh 1)^3 + (2 sinh 1)^3, by hand over 8 states.
        let l = raw_lattice(1, 3, 0.0, 1.0, Boundary::Open);
        let lz = enumerate_log_z(&l).unwrap();
        assert_abs_diff_eq!(lz, 3.7466376302658788177, epsilon = 1e-13);
        assert_abs_diff_eq!(lz.exp(), 42.378350493403989411, epsilon = 1e-10);
        let tm = transfer_log_z(&l).unwrap();
        assert_abs_diff_eq!(tm, lz, epsilon = 1e-13);
    }

    #[test]
    fn zero_couplings_count_states() {
        let l = raw_lattice(3, 4, 0.0, 0.0, Boundary::Periodic);
        assert_abs_diff_eq!(enumerate_log_z(&l).unwrap(), 12.0 * 2.0_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(transfer_log_z(&l).unwrap(), 12.0 * 2.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_by_two_periodic_isotropic_fixture() {
        // Periodic 2-column lattices double their spatial bond; the
        // frozen value counts that double bond explicitly.
        let l = raw_lattice(2, 2, 0.5, 0.5, Boundary::Periodic);
        let lz = enumerate_log_z(&l).unwrap();
        assert_abs_diff_eq!(lz, 4.7977137474881507952, epsilon = 1e-13);
        assert_abs_diff_eq!(transfer_log_z(&l).unwrap(), lz, epsilon = 1e-13);
    }

    #[test]
    fn transfer_matches_enumeration_on_a_three_by_four() {
        let l = raw_lattice(3, 4, 0.8, -0.6, Boundary::Periodic);
        let a = enumerate_log_z(&l).unwrap();
        let b = transfer_log_z(&l).unwrap();
        assert!((a - b).abs() / a.abs() < 1e-12, "enum {a} vs tm {b}");
    }

    #[test]
    fn single_row_fast_path_matches_enumeration() {
        let l = raw_lattice(4, 1, 0.9, 0.7, Boundary::Periodic);
        let a = enumerate_log_z(&l).unwrap();
        let b = transfer_log_z(&l).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn caps_are_enforced() {
        let l = raw_lattice(5, 5, 0.1, 0.1, Boundary::Open);
        let err = enumerate_log_z(&l).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("enumeration cap"), "{err}");
        let l = raw_lattice(13, 2, 0.1, 0.1, Boundary::Open);
        assert_eq!(transfer_log_z(&l).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn enumeration_cap_clamps() {
        // The parsing/clamping rules, exercised directly on the
        // environment; a single test owns the variable to avoid races.
        std::env::remove_var(ENUM_CAP_ENV);
        assert_eq!(enumeration_cap(), 24);
        std::env::set_var(ENUM_CAP_ENV, "26");
        assert_eq!(enumeration_cap(), 26);
        std::env::set_var(ENUM_CAP_ENV, "40");
        assert_eq!(enumeration_cap(), 28);
        std::env::set_var(ENUM_CAP_ENV, "banana");
        assert_eq!(enumeration_cap(), 24);
        std::env::remove_var(ENUM_CAP_ENV);
    }

    #[test]
    fn empty_insertions_give_unit_value() {
        let l = raw_lattice(2, 3, 0.4, 0.6, Boundary::Open);
        for method in [Method::Enumeration, Method::TransferMatrix] {
            let r = expectation(&l, &[], method).unwrap();
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(r.log_partition, enumerate_log_z(&l).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn decoupled_xbond_estimator_is_exactly_tanh() {
        // J = 0: a single x-type insertion evaluates to tanh(beta B)
        // for every slice count.
        for n in [1usize, 2, 4, 8] {
            let l = map_tfim(&chain(3, 0.0, 1.0, Boundary::Open, 1.0), n).unwrap();
            let ins = insertion_for(&l, Observable::Sx { site: 1 }, 0).unwrap();
            for method in [Method::Enumeration, Method::TransferMatrix] {
                let r = expectation(&l, &ins, method).unwrap();
                assert_abs_diff_eq!(r.value, 0.76159415595576488812, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spatial_pair_read_matches_thermal_chain() {
        // Single row, two open columns with coupling 1: reading both
        // spins gives tanh(1), the classical pair correlator.
        let l = raw_lattice(2, 1, 1.0, 0.0, Boundary::Open);
        let ins = [
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: 0, strength: 0.0 },
            InsertionSpec { kind: InsertionKind::Z, site: 1, slice: 0, strength: 0.0 },
        ];
        for method in [Method::Enumeration, Method::TransferMatrix] {
            let r = expectation(&l, &ins, method).unwrap();
            assert_abs_diff_eq!(r.value, 0.76159415595576488812, epsilon = 1e-13);
        }
    }

    #[test]
    fn insertion_expectations_agree_across_methods_and_slices() {
        let l = map_tfim(&chain(3, 0.7, 1.1, Boundary::Periodic, 1.3), 4).unwrap();
        for observable in [
            Observable::Sx { site: 0 },
            Observable::SxSx { site_a: 0, site_b: 1 },
            Observable::SySy { site: 1 },
            Observable::SzSz { site: 2 },
            Observable::Sz { site: 0 },
        ] {
            let base = expectation(
                &l,
                &insertion_for(&l, observable, 0).unwrap(),
                Method::Enumeration,
            )
            .unwrap()
            .value;
            for slice in 0..4 {
                let ins = insertion_for(&l, observable, slice).unwrap();
                for method in [Method::Enumeration, Method::TransferMatrix] {
                    let r = expectation(&l, &ins, method).unwrap();
                    assert_abs_diff_eq!(r.value, base, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn unpaired_y_insertions_are_rejected() {
        let l = map_tfim(&chain(3, 1.0, 1.0, Boundary::Periodic, 1.0), 4).unwrap();
        let ins = [InsertionSpec { kind: InsertionKind::YSpinBond, site: 0, slice: 0, strength: 0.4 }];
        let err = expectation(&l, &ins, Method::Enumeration).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("pairs"), "{err}");
    }

    #[test]
    fn out_of_range_insertions_are_rejected() {
        let l = raw_lattice(2, 2, 0.1, 0.1, Boundary::Open);
        let ins = [InsertionSpec { kind: InsertionKind::Z, site: 2, slice: 0, strength: 0.0 }];
        assert_eq!(expectation(&l, &ins, Method::Enumeration).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn free_energy_of_decoupled_chain_is_exact_for_every_n() {
        // J = 0, gamma = beta B = 1: F = -(M / beta) ln(2 cosh 1),
        // independent of the slice count.
        let beta = 0.5;
        let expect = -(3.0 / beta) * (2.0 * 1.0_f64.cosh()).ln();
        for n in [1usize, 3, 6] {
            let l = map_tfim(&chain(3, 0.0, 2.0, Boundary::Open, beta), n).unwrap();
            assert_abs_diff_eq!(free_energy(&l).unwrap(), expect, epsilon = 1e-12);
            assert_abs_diff_eq!(
                free_energy_with(&l, Method::Enumeration).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn free_energy_needs_beta_context() {
        let l = raw_lattice(2, 2, 0.5, 0.5, Boundary::Open);
        let err = free_energy(&l).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn multi_slice_lists_fall_back_to_enumeration() {
        let l = raw_lattice(2, 3, 0.3, 0.4, Boundary::Open);
        let ins = [
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: 0, strength: 0.0 },
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: 1, strength: 0.0 },
        ];
        assert!(expectation(&l, &ins, Method::Enumeration).is_ok());
        let err = expectation(&l, &ins, Method::TransferMatrix).unwrap_err();
        assert!(err.to_string().contains("single slice"), "{err}");
    }
}
