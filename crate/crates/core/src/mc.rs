//! Metropolis sampling of classical lattices, for sizes beyond the
//! exact evaluators.
//!
//! The target density is proportional to exp(+E) with
//! E = sum over bonds of c * s * s'. Sweeps are sequential
//! single-spin updates; estimators are slice-averaged over every
//! cyclic time shift, binned, and given jackknife errors. All
//! randomness comes from counter-seeded ChaCha streams, so results
//! for a given (lattice, insertions, config) are bit-reproducible on
//! any machine and any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::lattice::{check_insertions, insertion_product, neighbour_table, SpinConfiguration};
use crate::trotter::{ClassicalLatticeSpec, InsertionSpec};

/// Sampling plan. `sweeps` counts total sweeps per chain including
/// the discarded burn-in prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub bins: usize,
}

impl McConfig {
    /// Defaults: 20% burn-in and 32 bins.
    pub fn new(seed: u64, chains: usize, sweeps: usize) -> Self {
        McConfig { seed, chains, sweeps, burn_in: sweeps / 5, bins: 32 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::invalid(Module::Mc, "at least one chain is required"));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::invalid(
                Module::Mc,
                format!("sweeps ({}) must exceed burn_in ({})", self.sweeps, self.burn_in),
            ));
        }
        if self.bins < 8 {
            return Err(Error::invalid(Module::Mc, "at least 8 bins are required"));
        }
        if self.sweeps - self.burn_in < self.bins {
            return Err(Error::invalid(
                Module::Mc,
                format!(
                    "only {} measurement sweeps for {} bins; lengthen the run",
                    self.sweeps - self.burn_in,
                    self.bins
                ),
            ));
        }
        Ok(())
    }

    fn samples_per_bin(&self) -> usize {
        (self.sweeps - self.burn_in) / self.bins
    }
}

/// A sampled observable with its jackknife error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
    /// Rough integrated autocorrelation: bin length times the ratio
    /// of bin-mean variance to raw sample variance.
    pub autocorrelation_hint: f64,
    /// Largest |slice-averaged sample| seen; insertion estimators are
    /// bounded, so this doubles as an overflow sentinel.
    pub max_abs_sample: f64,
}

/// One bin mean, labelled by its chain, for trace output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinTrace {
    pub chain: usize,
    pub bin: usize,
    pub value: f64,
}

/// Estimate plus its per-bin trace.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub estimate: Estimate,
    pub trace: Vec<BinTrace>,
}

/// One sequential Metropolis pass over every site. Returns the number
/// of accepted flips.
pub fn metropolis_sweep(
    config: &mut SpinConfiguration,
    table: &[Vec<(u32, f64)>],
    rng: &mut impl Rng,
) -> usize {
    let mut accepted = 0;
    for site in 0..config.len() {
        let mut field = 0.0;
        for &(nbr, coupling) in &table[site] {
            field += coupling * config.spin(nbr as usize);
        }
        let delta = -2.0 * config.spin(site) * field;
        // Ties are accepted with probability 1/2: a forced accept at
        // delta == 0 makes the scan deterministic on degenerate
        // neighbourhoods and loses ergodicity on small rings.
        let accept = if delta == 0.0 {
            rng.gen::<f64>() < 0.5
        } else {
            delta > 0.0 || rng.gen::<f64>() < delta.exp()
        };
        if accept {
            config.flip(site);
            accepted += 1;
        }
    }
    accepted
}

struct GroupStats {
    bin_means: Vec<f64>,
    raw_sum: f64,
    raw_sumsq: f64,
    max_abs: f64,
}

fn run_chain(
    lattice: &ClassicalLatticeSpec,
    groups: &[&[InsertionSpec]],
    cfg: &McConfig,
    chain_index: usize,
) -> Result<Vec<GroupStats>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(chain_index as u64));
    let spins = lattice.spins();
    let m = lattice.columns;
    let n = lattice.rows;
    let table = neighbour_table(lattice);

    let mut config = SpinConfiguration::all_up(spins);
    for site in 0..spins {
        if rng.gen::<bool>() {
            config.flip(site);
        }
    }
    for _ in 0..cfg.burn_in {
        metropolis_sweep(&mut config, &table, &mut rng);
    }

    let checked: Vec<_> =
        groups.iter().map(|g| check_insertions(lattice, g)).collect::<Result<_>>()?;
    let per_bin = cfg.samples_per_bin();
    let mut stats: Vec<GroupStats> = groups
        .iter()
        .map(|_| GroupStats {
            bin_means: vec![0.0; cfg.bins],
            raw_sum: 0.0,
            raw_sumsq: 0.0,
            max_abs: 0.0,
        })
        .collect();

    let measured = cfg.sweeps - cfg.burn_in;
    for k in 0..measured {
        metropolis_sweep(&mut config, &table, &mut rng);
        let bin = k / per_bin;
        if bin >= cfg.bins {
            continue; // trailing remainder sweeps keep the trajectory but are not recorded
        }
        for (group, stat) in checked.iter().zip(stats.iter_mut()) {
            let mut sum = 0.0;
            for offset in 0..n {
                sum += insertion_product(lattice, group, offset, |col, row| {
                    config.spin(row * m + col)
                });
            }
            let value = sum / n as f64;
            stat.bin_means[bin] += value;
            stat.raw_sum += value;
            stat.raw_sumsq += value * value;
            stat.max_abs = stat.max_abs.max(value.abs());
        }
    }
    for stat in &mut stats {
        for b in &mut stat.bin_means {
            *b /= per_bin as f64;
        }
    }
    Ok(stats)
}

fn jackknife(bin_means: &[f64]) -> (f64, f64) {
    let b = bin_means.len() as f64;
    let total: f64 = bin_means.iter().sum();
    let mean = total / b;
    let mut var = 0.0;
    for &x in bin_means {
        let loo = (total - x) / (b - 1.0);
        var += (loo - mean) * (loo - mean);
    }
    (mean, ((b - 1.0) / b * var).sqrt())
}

/// Samples several insertion lists along one shared set of
/// trajectories; results come back in input order with bin traces in
/// (chain, bin) order.
pub fn estimate_many(
    lattice: &ClassicalLatticeSpec,
    groups: &[&[InsertionSpec]],
    cfg: &McConfig,
) -> Result<Vec<McRun>> {
    lattice.validate().map_err(|e| match e {
        Error::Invalid { message, .. } => Error::invalid(Module::Mc, message),
        other => other,
    })?;
    cfg.validate()?;
    for g in groups {
        check_insertions(lattice, g)
            .map_err(|e| Error::invalid(Module::Mc, e.to_string()))?;
    }

    let chain_stats: Vec<Vec<GroupStats>> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_chain(lattice, groups, cfg, chain))
        .collect::<Result<_>>()?;

    let per_bin = cfg.samples_per_bin();
    let used_per_chain = per_bin * cfg.bins;
    let mut out = Vec::with_capacity(groups.len());
    for g in 0..groups.len() {
        let mut trace = Vec::with_capacity(cfg.chains * cfg.bins);
        let mut raw_sum = 0.0;
        let mut raw_sumsq = 0.0;
        let mut max_abs = 0.0_f64;
        for (chain, stats) in chain_stats.iter().enumerate() {
            let stat = &stats[g];
            for (bin, &value) in stat.bin_means.iter().enumerate() {
                trace.push(BinTrace { chain, bin, value });
            }
            raw_sum += stat.raw_sum;
            raw_sumsq += stat.raw_sumsq;
            max_abs = max_abs.max(stat.max_abs);
        }
        let bin_means: Vec<f64> = trace.iter().map(|t| t.value).collect();
        let (mean, std_err) = jackknife(&bin_means);
        let n_samples = (used_per_chain * cfg.chains) as u64;
        let nf = n_samples as f64;
        let raw_var = (raw_sumsq - raw_sum * raw_sum / nf) / (nf - 1.0);
        let bins_f = bin_means.len() as f64;
        let bin_var =
            bin_means.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (bins_f - 1.0);
        let autocorrelation_hint = if raw_var > f64::EPSILON * raw_sumsq.abs().max(1.0) {
            per_bin as f64 * bin_var / raw_var
        } else {
            0.0
        };
        out.push(McRun {
            estimate: Estimate { mean, std_err, n_samples, autocorrelation_hint, max_abs_sample: max_abs },
            trace,
        });
    }
    Ok(out)
}

/// Maps a chain and samples all four nearest-neighbour correlators of
/// the pair (0, 1) along shared trajectories. Returns the correlator
/// set (with jackknife errors) and the per-observable runs in
/// (m_x, c_x, c_y, c_z) order.
pub fn mc_correlators(
    chain: &crate::spinchain::QuantumChainSpec,
    n: usize,
    cfg: &McConfig,
) -> Result<(crate::spinchain::CorrelatorSet, Vec<McRun>)> {
    use crate::spinchain::{CorrelatorSet, Provenance};
    use crate::trotter::{insertion_for, map_tfim, Observable};
    if chain.sites < 2 {
        return Err(Error::invalid(
            Module::Mc,
            "nearest-neighbour correlators need at least two sites",
        ));
    }
    let lattice = map_tfim(chain, n)?;
    let groups: Vec<Vec<InsertionSpec>> = [
        Observable::Sx { site: 0 },
        Observable::SxSx { site_a: 0, site_b: 1 },
        Observable::SySy { site: 0 },
        Observable::SzSz { site: 0 },
    ]
    .into_iter()
    .map(|observable| insertion_for(&lattice, observable, 0))
    .collect::<Result<_>>()?;
    let group_refs: Vec<&[InsertionSpec]> = groups.iter().map(|g| g.as_slice()).collect();
    let runs = estimate_many(&lattice, &group_refs, cfg)?;
    let e: Vec<&Estimate> = runs.iter().map(|r| &r.estimate).collect();
    let set = CorrelatorSet {
        m_x: e[0].mean,
        c_x: e[1].mean,
        c_y: e[2].mean,
        c_z: e[3].mean,
        provenance: Provenance::ClassicalMc,
        std_err: [e[0].std_err, e[1].std_err, e[2].std_err, e[3].std_err],
    };
    Ok((set, runs))
}

/// Samples a single insertion list and returns its estimate.
pub fn estimate(
    lattice: &ClassicalLatticeSpec,
    insertions: &[InsertionSpec],
    cfg: &McConfig,
) -> Result<Estimate> {
    Ok(estimate_with_trace(lattice, insertions, cfg)?.estimate)
}

/// [`estimate`] keeping the per-bin trace.
pub fn estimate_with_trace(
    lattice: &ClassicalLatticeSpec,
    insertions: &[InsertionSpec],
    cfg: &McConfig,
) -> Result<McRun> {
    let mut runs = estimate_many(lattice, &[insertions], cfg)?;
    Ok(runs.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_log_z, expectation, Method};
    use crate::spinchain::{Boundary, QuantumChainSpec};
    use crate::trotter::{insertion_for, map_tfim, InsertionKind, Observable, TimeBoundary};

    fn ring(rows: usize, k: f64) -> ClassicalLatticeSpec {
        ClassicalLatticeSpec {
            columns: 1,
            rows,
            spatial_coupling: 0.0,
            temporal_coupling: k,
            log_prefactor: 0.0,
            boundary_space: Boundary::Open,
            boundary_time: TimeBoundary::Periodic,
            beta: None,
        }
    }

    fn z_pair(site_a: usize, site_b: usize, slice: usize) -> Vec<InsertionSpec> {
        vec![
            InsertionSpec { kind: InsertionKind::Z, site: site_a, slice, strength: 0.0 },
            InsertionSpec { kind: InsertionKind::Z, site: site_b, slice, strength: 0.0 },
        ]
    }

    /// Temporal pair on a single-column lattice: reads at two slices.
    fn t_pair(slice_a: usize, slice_b: usize) -> Vec<InsertionSpec> {
        vec![
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: slice_a, strength: 0.0 },
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: slice_b, strength: 0.0 },
        ]
    }

    #[test]
    fn config_invariants_are_enforced() {
        assert!(McConfig::new(1, 2, 1000).validate().is_ok());
        let bad = McConfig { seed: 1, chains: 0, sweeps: 10, burn_in: 1, bins: 8 };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        let bad = McConfig { seed: 1, chains: 1, sweeps: 10, burn_in: 10, bins: 8 };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        let bad = McConfig { seed: 1, chains: 1, sweeps: 100, burn_in: 10, bins: 4 };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        let bad = McConfig { seed: 1, chains: 1, sweeps: 20, burn_in: 10, bins: 32 };
        assert!(bad.validate().unwrap_err().to_string().contains("bins"));
    }

    #[test]
    fn zero_couplings_sample_uniformly() {
        // chi-squared over all 16 states of a decoupled 4-spin ring,
        // thinned; 30.578 is the 99th percentile of chi2(15).
        let l = ring(4, 0.0);
        let table = neighbour_table(&l);
        let mut rng = ChaCha8Rng::seed_from_u64(901);
        let mut config = SpinConfiguration::all_up(4);
        let mut counts = [0u64; 16];
        let samples = 40_000;
        for _ in 0..samples {
            for _ in 0..3 {
                metropolis_sweep(&mut config, &table, &mut rng);
            }
            let state: usize =
                (0..4).map(|i| if config.spin(i) < 0.0 { 1 << i } else { 0 }).sum();
            counts[state] += 1;
        }
        let expect = samples as f64 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 30.578, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn sampler_reproduces_ring_distribution() {
        // Detailed balance against the exact distribution of a coupled
        // ring, same chi-squared gate.
        let l = ring(4, 0.4);
        let table = neighbour_table(&l);
        let bonds = crate::lattice::bonds(&l);
        let mut weights = [0.0f64; 16];
        for s in 0..16u64 {
            let c = SpinConfiguration::from_index(4, s);
            weights[s as usize] = crate::lattice::config_energy(&c, &bonds).exp();
        }
        let z: f64 = weights.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut config = SpinConfiguration::all_up(4);
        for _ in 0..200 {
            metropolis_sweep(&mut config, &table, &mut rng);
        }
        let mut counts = [0u64; 16];
        let samples = 250_000;
        for _ in 0..samples {
            for _ in 0..4 {
                metropolis_sweep(&mut config, &table, &mut rng);
            }
            let state: usize =
                (0..4).map(|i| if config.spin(i) < 0.0 { 1 << i } else { 0 }).sum();
            counts[state] += 1;
        }
        let chi2: f64 = (0..16)
            .map(|s| {
                let expect = samples as f64 * weights[s] / z;
                (counts[s] as f64 - expect).powi(2) / expect
            })
            .sum();
        assert!(chi2 < 30.578, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn strong_coupling_ring_orders() {
        let l = ring(8, 3.0);
        let cfg = McConfig::new(5, 2, 4000);
        let ins = [
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: 0, strength: 0.0 },
            InsertionSpec { kind: InsertionKind::Z, site: 0, slice: 1, strength: 0.0 },
        ];
        let e = estimate(&l, &ins, &cfg).unwrap();
        assert!(e.mean > 0.9, "mean {}", e.mean);
    }

    #[test]
    fn pair_correlator_matches_enumeration() {
        let l = ClassicalLatticeSpec {
            columns: 4,
            rows: 5,
            spatial_coupling: 0.35,
            temporal_coupling: 0.25,
            log_prefactor: 0.0,
            boundary_space: Boundary::Periodic,
            boundary_time: TimeBoundary::Periodic,
            beta: None,
        };
        let ins = z_pair(0, 1, 0);
        let exact = expectation(&l, &ins, Method::Enumeration).unwrap().value;
        let e = estimate(&l, &ins, &McConfig::new(11, 4, 6000)).unwrap();
        assert!(
            (e.mean - exact).abs() < 4.0 * e.std_err,
            "mc {} +- {} vs exact {exact}",
            e.mean,
            e.std_err
        );
        assert!(e.std_err > 0.0 && e.std_err < 0.05);
        assert_eq!(e.n_samples, 4 * (6000 - 1200) / 32 * 32);
    }

    #[test]
    fn x_estimator_matches_decoupled_exact_value() {
        let chain = QuantumChainSpec {
            sites: 2,
            coupling_j: 0.0,
            field_b: 1.0,
            boundary: Boundary::Open,
            beta: 1.0,
        };
        let l = map_tfim(&chain, 4).unwrap();
        let ins = insertion_for(&l, Observable::Sx { site: 0 }, 0).unwrap();
        let e = estimate(&l, &ins, &McConfig::new(3, 4, 8000)).unwrap();
        let exact = 0.76159415595576488812;
        assert!(
            (e.mean - exact).abs() < 3.0 * e.std_err,
            "mc {} +- {} vs exact {exact}",
            e.mean,
            e.std_err
        );
    }

    #[test]
    fn samples_respect_the_insertion_weight_bound() {
        // Each x-type bond factor is at most coth(gamma / n), reached
        // on an anti-aligned temporal pair.
        let chain = QuantumChainSpec {
            sites: 3,
            coupling_j: 1.0,
            field_b: 1.0,
            boundary: Boundary::Periodic,
            beta: 2.0,
        };
        let l = map_tfim(&chain, 2).unwrap();
        let bound = (1.0_f64 / 1.0_f64.tanh()).powi(2);
        let ins = insertion_for(&l, Observable::SxSx { site_a: 0, site_b: 1 }, 0).unwrap();
        let e = estimate(&l, &ins, &McConfig::new(21, 2, 2000)).unwrap();
        assert!(e.max_abs_sample <= bound + 1e-12, "{} > {bound}", e.max_abs_sample);
        assert!(e.max_abs_sample > 0.0);
    }

    #[test]
    fn reruns_are_bit_identical_and_seeds_decorrelate() {
        let l = ring(6, 0.5);
        let ins = t_pair(0, 1);
        let cfg = McConfig::new(77, 3, 2000);
        let a = estimate_with_trace(&l, &ins, &cfg).unwrap();
        let b = estimate_with_trace(&l, &ins, &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate(&l, &ins, &McConfig::new(78, 3, 2000)).unwrap();
        assert_ne!(a.estimate.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn shared_trajectories_match_independent_runs() {
        let l = ring(5, 0.3);
        let g1 = t_pair(0, 1);
        let g2 = t_pair(0, 2);
        let cfg = McConfig::new(9, 2, 1500);
        let many = estimate_many(&l, &[&g1, &g2], &cfg).unwrap();
        assert_eq!(many.len(), 2);
        assert_eq!(many[0].trace.len(), 2 * 32);
        // Different spacing, different correlator; both from one pass.
        assert_ne!(many[0].estimate.mean.to_bits(), many[1].estimate.mean.to_bits());
        let z = enumerate_log_z(&l).unwrap();
        assert!(z.is_finite());
    }

    #[test]
    fn autocorrelation_hint_grows_near_order() {
        let weak = estimate(&ring(8, 0.1), &t_pair(0, 1), &McConfig::new(4, 2, 4000)).unwrap();
        let strong = estimate(&ring(8, 1.2), &t_pair(0, 1), &McConfig::new(4, 2, 4000)).unwrap();
        assert!(strong.autocorrelation_hint > weak.autocorrelation_hint);
    }
}
