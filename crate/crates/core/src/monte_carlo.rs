//! Seeded Monte Carlo bit-error simulation of the end-to-end SSK link.
//!
//! Symbols are processed in fixed blocks of [`SHARD_SYMBOLS`], each block
//! drawing from its own stream derived from `(seed, MONTE_CARLO, block)`.
//! The error count of a run is therefore a sum of per-block integers that
//! does not depend on how blocks are distributed over threads: sharded and
//! single-threaded executions produce identical estimates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::realize_channels;
use crate::config::{PhaseResolution, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{abep_union_bound, min_pairwise_delta};
use crate::optimizer::{optimize, random_phase_baseline, OptimizeResult, OptimizerOptions};
use crate::rng::{derive_seed, domain, stream};

/// Symbols per RNG shard; part of the reproducibility contract.
pub const SHARD_SYMBOLS: u64 = 4096;

/// A bit-error-rate estimate with its 95% normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    /// `1.96 * sqrt(ber (1 - ber) / bits_total)`.
    pub ci_halfwidth: f64,
    /// Seed the shard streams were derived from.
    pub seed: u64,
}

fn simulate_block(
    h_eff: &DMatrix<Complex64>,
    n0: f64,
    symbols: u64,
    seed: u64,
    block: u64,
) -> u64 {
    let mut rng = stream(seed, &[domain::MONTE_CARLO, block]);
    let n_tx = h_eff.ncols();
    let n_rx = h_eff.nrows();
    let bits = n_tx.trailing_zeros();
    let sigma = (n0 * 0.5).sqrt();
    let mut y = vec![Complex64::ZERO; n_rx];
    let mut errors = 0u64;

    for _ in 0..symbols {
        // Uniform bits, natural mapping: the label is the antenna offset.
        let mut label = 0u32;
        for _ in 0..bits {
            label = (label << 1) | u32::from(rng.random::<bool>());
        }
        let tx = label as usize;
        let col = h_eff.column(tx);
        for (yr, cr) in y.iter_mut().zip(col.iter()) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *yr = cr + Complex64::new(re * sigma, im * sigma);
        }
        let detected = {
            let mut best = 0usize;
            let mut best_metric = f64::INFINITY;
            for t in 0..n_tx {
                let cand = h_eff.column(t);
                let mut metric = 0.0;
                for r in 0..n_rx {
                    metric += (y[r] - cand[r]).norm_sqr();
                }
                if metric < best_metric {
                    best_metric = metric;
                    best = t;
                }
            }
            best as u32
        };
        errors += u64::from((label ^ detected).count_ones());
    }
    errors
}

/// Estimates the BER of an effective channel at noise level `n0` over
/// `n_symbols` uniformly drawn SSK symbols. Deterministic in `seed` and
/// independent of threading.
pub fn simulate_ber(
    h_eff: &DMatrix<Complex64>,
    n0: f64,
    n_symbols: u64,
    seed: u64,
) -> Result<BerEstimate> {
    if n_symbols == 0 {
        return Err(Error::InvalidInput("need at least one symbol".into()));
    }
    if !(n0 > 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be > 0, got {n0}")));
    }
    let n_tx = h_eff.ncols();
    if n_tx < 2 || !n_tx.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "effective channel must have a power-of-two column count >= 2, got {n_tx}"
        )));
    }

    let blocks = n_symbols.div_ceil(SHARD_SYMBOLS);
    let block_symbols = |b: u64| -> u64 {
        if (b + 1) * SHARD_SYMBOLS <= n_symbols {
            SHARD_SYMBOLS
        } else {
            n_symbols - b * SHARD_SYMBOLS
        }
    };

    #[cfg(feature = "parallel")]
    let bit_errors: u64 = {
        use rayon::prelude::*;
        (0..blocks)
            .into_par_iter()
            .map(|b| simulate_block(h_eff, n0, block_symbols(b), seed, b))
            .sum()
    };
    #[cfg(not(feature = "parallel"))]
    let bit_errors: u64 = (0..blocks)
        .map(|b| simulate_block(h_eff, n0, block_symbols(b), seed, b))
        .sum();

    let bits_total = n_symbols * u64::from(n_tx.trailing_zeros());
    let ber = bit_errors as f64 / bits_total as f64;
    Ok(BerEstimate {
        bit_errors,
        bits_total,
        ber,
        ci_halfwidth: 1.96 * (ber * (1.0 - ber) / bits_total as f64).sqrt(),
        seed,
    })
}

/// How the reflection phases of each realization are chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhaseSource {
    /// Penalty-alternating SCA at the configured quantization.
    Optimized,
    /// Uniform random phases from the configured alphabet.
    Random,
    /// RIS absent: the direct channel alone.
    NoRis,
    /// Optimized with the continuous-phase surrogate alphabet.
    Continuous,
}

impl PhaseSource {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseSource::Optimized => "optimized",
            PhaseSource::Random => "random",
            PhaseSource::NoRis => "no_ris",
            PhaseSource::Continuous => "continuous",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "optimized" => Ok(PhaseSource::Optimized),
            "random" => Ok(PhaseSource::Random),
            "no_ris" => Ok(PhaseSource::NoRis),
            "continuous" => Ok(PhaseSource::Continuous),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme `{other}` (expected optimized, random, no_ris or continuous)"
            ))),
        }
    }

    fn domain_tag(&self) -> u64 {
        match self {
            PhaseSource::Optimized => 1,
            PhaseSource::Random => 2,
            PhaseSource::NoRis => 3,
            PhaseSource::Continuous => 4,
        }
    }
}

/// One output row of an SNR sweep; the CSV schema of the experiment runner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: String,
    pub snr_db: f64,
    pub realization: u32,
    pub ber: f64,
    pub ci_halfwidth: f64,
    pub abep_bound: f64,
    pub min_delta: f64,
}

/// Sweep output plus the optimizer trace of each realization (when the
/// phase source runs the optimizer).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub optimizer_runs: Vec<Option<OptimizeResult>>,
}

/// `snr_db = 10 log10(1 / n0)` under unit symbol energy.
pub fn n0_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Runs the full pipeline for one phase source: for every channel
/// realization, pick phases, then measure Monte Carlo BER and the analytic
/// union bound at every SNR point.
pub fn sweep_snr(
    config: &SystemConfig,
    source: &PhaseSource,
    snr_grid_db: &[f64],
    n_symbols: u64,
    realizations: u32,
    seed: u64,
) -> Result<SweepOutput> {
    if snr_grid_db.is_empty() {
        return Err(Error::InvalidInput("SNR grid must not be empty".into()));
    }
    if realizations == 0 {
        return Err(Error::InvalidInput("need at least one realization".into()));
    }
    config.validate()?;

    let run_one = |r: u32| -> Result<(Vec<SweepRow>, Option<OptimizeResult>)> {
        let channels = realize_channels(config, u64::from(r))?;
        let mut opt_run = None;
        let h_eff = match source {
            PhaseSource::NoRis => channels.h_direct.clone(),
            PhaseSource::Random => {
                let mut rng = stream(seed, &[domain::RANDOM_PHASES, u64::from(r)]);
                let u = random_phase_baseline(&channels, config.q_bits.bits(), &mut rng);
                channels.effective(&u.entries())?
            }
            PhaseSource::Optimized => {
                let run = optimize(&channels, config, &OptimizerOptions::default())?;
                let h = channels.effective(&run.u_final.entries())?;
                opt_run = Some(run);
                h
            }
            PhaseSource::Continuous => {
                let cont_cfg = SystemConfig {
                    q_bits: PhaseResolution::Continuous,
                    ..config.clone()
                };
                let run = optimize(&channels, &cont_cfg, &OptimizerOptions::default())?;
                let h = channels.effective(&run.u_final.entries())?;
                opt_run = Some(run);
                h
            }
        };
        let min_delta = min_pairwise_delta(&h_eff).0;
        let mut rows = Vec::with_capacity(snr_grid_db.len());
        for (s_idx, &snr_db) in snr_grid_db.iter().enumerate() {
            let n0 = n0_from_snr_db(snr_db);
            let mc_seed = derive_seed(
                seed,
                &[
                    domain::SWEEP,
                    source.domain_tag(),
                    u64::from(r),
                    s_idx as u64,
                ],
            );
            let est = simulate_ber(&h_eff, n0, n_symbols, mc_seed)?;
            let report = abep_union_bound(&h_eff, n0)?;
            rows.push(SweepRow {
                scheme: source.name().to_string(),
                snr_db,
                realization: r,
                ber: est.ber,
                ci_halfwidth: est.ci_halfwidth,
                abep_bound: report.abep_bound,
                min_delta,
            });
        }
        Ok((rows, opt_run))
    };

    // Realizations are independent; results are assembled in index order so
    // the output does not depend on scheduling.
    #[cfg(feature = "parallel")]
    let per_realization: Vec<Result<(Vec<SweepRow>, Option<OptimizeResult>)>> = {
        use rayon::prelude::*;
        (0..realizations).into_par_iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_realization: Vec<Result<(Vec<SweepRow>, Option<OptimizeResult>)>> =
        (0..realizations).map(run_one).collect();

    let mut rows = Vec::with_capacity(snr_grid_db.len() * realizations as usize);
    let mut optimizer_runs = Vec::with_capacity(realizations as usize);
    for outcome in per_realization {
        let (r_rows, opt) = outcome?;
        rows.extend(r_rows);
        optimizer_runs.push(opt);
    }
    Ok(SweepOutput {
        rows,
        optimizer_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_rayleigh;
    use crate::metrics::cpep;
    use crate::rng;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn noiseless_limit_has_zero_errors() {
        let mut r = rng::stream(40, &[1]);
        let h = gen_rayleigh(4, 4, &mut r);
        let est = simulate_ber(&h, 1e-12, 20_000, 7).unwrap();
        assert_eq!(est.bit_errors, 0);
        assert_eq!(est.bits_total, 40_000);
        assert_eq!(est.ber, 0.0);
    }

    #[test]
    fn same_seed_same_estimate() {
        let mut r = rng::stream(40, &[2]);
        let h = gen_rayleigh(2, 4, &mut r);
        let a = simulate_ber(&h, 0.8, 30_000, 99).unwrap();
        let b = simulate_ber(&h, 0.8, 30_000, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_ber(&h, 0.8, 30_000, 100).unwrap();
        assert_ne!(a.bit_errors, c.bit_errors);
    }

    #[test]
    fn sharding_rule_makes_partition_irrelevant() {
        // Manually accumulating per-block counts in any grouping must match
        // the library run exactly.
        let mut r = rng::stream(40, &[3]);
        let h = gen_rayleigh(2, 4, &mut r);
        let n0 = 0.5;
        let n_symbols = 3 * SHARD_SYMBOLS + 1234;
        let seed = 5;
        let whole = simulate_ber(&h, n0, n_symbols, seed).unwrap();
        let blocks = n_symbols.div_ceil(SHARD_SYMBOLS);
        let mut manual = 0u64;
        for b in 0..blocks {
            let len = SHARD_SYMBOLS.min(n_symbols - b * SHARD_SYMBOLS);
            manual += simulate_block(&h, n0, len, seed, b);
        }
        assert_eq!(whole.bit_errors, manual);
    }

    #[test]
    fn two_antenna_ber_matches_analytic_pairwise_error() {
        // Orthogonal equal-norm columns: BER equals Q(sqrt(d / 2 n0)).
        let d = 3.0f64;
        let a = (d / 2.0).sqrt();
        let h = DMatrix::from_columns(&[
            DVector::from_vec(vec![Complex64::new(a, 0.0), Complex64::ZERO]),
            DVector::from_vec(vec![Complex64::ZERO, Complex64::new(a, 0.0)]),
        ]);
        let n0 = 0.4;
        let est = simulate_ber(&h, n0, 1_000_000, 11).unwrap();
        let p = cpep(d, n0).unwrap();
        let sigma = (p * (1.0 - p) / est.bits_total as f64).sqrt();
        assert!(
            (est.ber - p).abs() <= 3.0 * sigma,
            "ber {} vs analytic {p} (3 sigma {})",
            est.ber,
            3.0 * sigma
        );
    }

    #[test]
    fn two_antenna_z_scores_stay_within_three_sigma() {
        // 30 seeded repetitions on fresh channels: the normalized deviation
        // between the MC estimate and the closed-form pairwise error stays
        // within 3 sigma in at least 29 of 30.
        let symbols = 100_000u64;
        let mut inside = 0u32;
        for rep in 0..30u64 {
            let mut r = rng::stream(500 + rep, &[7]);
            let h = gen_rayleigh(2, 2, &mut r);
            let delta = crate::metrics::pairwise_delta(&h, 1, 2).unwrap();
            let n0 = delta / (2.0 * 1.6449 * 1.6449); // p = 5e-2
            let p = cpep(delta, n0).unwrap();
            let est = simulate_ber(&h, n0, symbols, 900 + rep).unwrap();
            let sd = (p * (1.0 - p) / est.bits_total as f64).sqrt();
            inside += u32::from((est.ber - p).abs() <= 3.0 * sd);
        }
        assert!(inside >= 29, "only {inside}/30 within 3 sigma");
    }

    #[test]
    fn ci_halfwidth_scales_as_inverse_sqrt_n() {
        let mut r = rng::stream(40, &[4]);
        let h = gen_rayleigh(2, 2, &mut r);
        let n0 = 1.0;
        let a = simulate_ber(&h, n0, 200_000, 3).unwrap();
        let b = simulate_ber(&h, n0, 400_000, 3).unwrap();
        let ratio = a.ci_halfwidth / b.ci_halfwidth;
        assert!(
            (ratio - 2f64.sqrt()).abs() < 0.05 * 2f64.sqrt(),
            "ratio {ratio}"
        );
        assert_relative_eq!(
            a.ci_halfwidth,
            1.96 * (a.ber * (1.0 - a.ber) / a.bits_total as f64).sqrt()
        );
    }

    #[test]
    fn sweep_single_point_matches_direct_call() {
        let config = SystemConfig {
            n_ris: 4,
            seed: 3,
            ..SystemConfig::default()
        };
        let out = sweep_snr(&config, &PhaseSource::NoRis, &[6.0], 5_000, 1, 42).unwrap();
        assert_eq!(out.rows.len(), 1);
        let row = &out.rows[0];
        let channels = realize_channels(&config, 0).unwrap();
        let mc_seed = derive_seed(42, &[domain::SWEEP, PhaseSource::NoRis.domain_tag(), 0, 0]);
        let est = simulate_ber(&channels.h_direct, n0_from_snr_db(6.0), 5_000, mc_seed).unwrap();
        assert_eq!(row.ber, est.ber);
        assert_eq!(row.scheme, "no_ris");
        assert!(out.optimizer_runs[0].is_none());
    }

    #[test]
    fn sweep_bound_dominates_ber_and_is_deterministic() {
        let config = SystemConfig {
            n_ris: 8,
            n_tx: 2,
            n_rx: 2,
            seed: 9,
            ..SystemConfig::default()
        };
        let grid = [-5.0, 0.0, 5.0, 10.0];
        let out = sweep_snr(&config, &PhaseSource::Random, &grid, 20_000, 4, 1).unwrap();
        assert_eq!(out.rows.len(), grid.len() * 4);
        for row in &out.rows {
            assert!(
                row.abep_bound >= row.ber - 3.0 * row.ci_halfwidth,
                "bound {} < ber {} - 3ci",
                row.abep_bound,
                row.ber
            );
        }
        let again = sweep_snr(&config, &PhaseSource::Random, &grid, 20_000, 4, 1).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let config = SystemConfig::default();
        assert!(sweep_snr(&config, &PhaseSource::NoRis, &[], 100, 1, 0).is_err());
    }
}
