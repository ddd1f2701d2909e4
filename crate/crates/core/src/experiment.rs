//! Experiment presets, CSV/JSON emission and trend summaries.
//!
//! An experiment is a set of arms (label + config + phase source) swept over
//! a common SNR grid. Each run writes one CSV with the fixed row schema
//! `scheme,snr_db,realization,ber,ci_halfwidth,abep_bound,min_delta` and a
//! JSON sidecar carrying the full configuration, seeds, library version and
//! optimizer traces, so every row is reproducible from the sidecar alone.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{PhaseResolution, SystemConfig};
use crate::error::{Error, Result};
use crate::monte_carlo::{sweep_snr, PhaseSource, SweepRow, SHARD_SYMBOLS};
use crate::optimizer::OptimizeResult;
use crate::rng::{derive_seed, domain};

/// CSV header of every experiment output, fixed by contract.
pub const CSV_HEADER: &str = "scheme,snr_db,realization,ber,ci_halfwidth,abep_bound,min_delta";

/// Default BER level at which SNR gaps between schemes are interpolated.
pub const TARGET_BER: f64 = 1e-3;

/// One experiment arm: a labeled (config, phase source) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentArm {
    pub label: String,
    pub config: SystemConfig,
    pub source: PhaseSource,
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub arms: Vec<ExperimentArm>,
    pub snr_grid_db: Vec<f64>,
    pub symbols: u64,
    pub realizations: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::InvalidInput("experiment has an empty scheme list".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidInput("experiment has an empty SNR grid".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "SNR grid must be strictly ascending".into(),
            ));
        }
        if self.symbols == 0 {
            return Err(Error::InvalidInput("symbol budget must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidInput("need at least one realization".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for arm in &self.arms {
            if !seen.insert(arm.label.clone()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate arm label `{}`",
                    arm.label
                )));
            }
            arm.config.validate()?;
        }
        Ok(())
    }
}

fn grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut x = start;
    while x <= stop + 1e-9 {
        v.push(x);
        x += step;
    }
    v
}

fn base_config(n_tx: usize, n_rx: usize, n_ris: usize, q: u32, seed: u64) -> SystemConfig {
    SystemConfig {
        n_tx,
        n_rx,
        n_ris,
        q_bits: PhaseResolution::Bits(q),
        seed,
        ..SystemConfig::default()
    }
}

/// Builds one of the four named presets. Desk-scale RIS sizes are the
/// default; `full` switches to the larger published sizes (slower).
pub fn preset_spec(name: &str, seed: u64, out_dir: &Path, full: bool) -> Result<ExperimentSpec> {
    let spec = match name {
        // Benchmark comparison: optimized at several RIS sizes vs random
        // reflection vs no RIS; N_t = N_r = 4, Q = 3.
        "fig2" => {
            let sizes: &[usize] = if full { &[32, 64, 128] } else { &[32, 64] };
            let l_max = *sizes.last().unwrap();
            let mut arms: Vec<ExperimentArm> = sizes
                .iter()
                .map(|&l| ExperimentArm {
                    label: format!("optimized_l{l}"),
                    config: base_config(4, 4, l, 3, seed),
                    source: PhaseSource::Optimized,
                })
                .collect();
            arms.push(ExperimentArm {
                label: format!("random_l{l_max}"),
                config: base_config(4, 4, l_max, 3, seed),
                source: PhaseSource::Random,
            });
            arms.push(ExperimentArm {
                label: "no_ris".into(),
                config: base_config(4, 4, l_max, 3, seed),
                source: PhaseSource::NoRis,
            });
            ExperimentSpec {
                name: "fig2".into(),
                arms,
                snr_grid_db: grid(-28.0, 4.0, 8.0),
                symbols: 100_000,
                realizations: 50,
                seed,
                out_dir: out_dir.to_path_buf(),
            }
        }
        // Quantization study: Q = 1, 2, 3 vs the continuous surrogate at a
        // fixed RIS size.
        "fig3" => {
            let l = if full { 128 } else { 64 };
            let mut arms: Vec<ExperimentArm> = (1..=3u32)
                .map(|q| ExperimentArm {
                    label: format!("optimized_q{q}"),
                    config: base_config(4, 4, l, q, seed),
                    source: PhaseSource::Optimized,
                })
                .collect();
            arms.push(ExperimentArm {
                label: "continuous".into(),
                config: base_config(4, 4, l, 3, seed),
                source: PhaseSource::Continuous,
            });
            ExperimentSpec {
                name: "fig3".into(),
                arms,
                snr_grid_db: grid(-30.0, 2.0, -12.0),
                symbols: 100_000,
                realizations: 50,
                seed,
                out_dir: out_dir.to_path_buf(),
            }
        }
        // Receive-array study: N_r = 4 vs 8.
        "fig4" => {
            let l = if full { 128 } else { 64 };
            let arms = [4usize, 8]
                .iter()
                .map(|&n_rx| ExperimentArm {
                    label: format!("optimized_nr{n_rx}"),
                    config: base_config(4, n_rx, l, 3, seed),
                    source: PhaseSource::Optimized,
                })
                .collect();
            ExperimentSpec {
                name: "fig4".into(),
                arms,
                snr_grid_db: grid(-30.0, 2.0, -18.0),
                symbols: 100_000,
                realizations: 30,
                seed,
                out_dir: out_dir.to_path_buf(),
            }
        }
        // Modulation-order study: N_t = 4 vs 8.
        "fig5" => {
            let l = if full { 256 } else { 64 };
            let arms = [4usize, 8]
                .iter()
                .map(|&n_tx| ExperimentArm {
                    label: format!("optimized_nt{n_tx}"),
                    config: base_config(n_tx, 4, l, 3, seed),
                    source: PhaseSource::Optimized,
                })
                .collect();
            ExperimentSpec {
                name: "fig5".into(),
                arms,
                snr_grid_db: grid(-30.0, 2.0, -16.0),
                symbols: 100_000,
                realizations: 30,
                seed,
                out_dir: out_dir.to_path_buf(),
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset `{other}` (expected fig2, fig3, fig4 or fig5)"
            )))
        }
    };
    Ok(spec)
}

/// Compact optimizer record stored in the sidecar.
#[derive(Debug, Clone, Serialize)]
struct OptimizerSummary {
    realization: u32,
    converged: bool,
    achieved_min_delta: f64,
    outer_iterations: usize,
    middle_iterations: usize,
    inner_iterations: usize,
    final_residual: f64,
    objective_trace: Vec<f64>,
    phase_indices: Vec<u32>,
    q_bits: u32,
}

impl OptimizerSummary {
    fn from_run(realization: u32, run: &OptimizeResult) -> Self {
        OptimizerSummary {
            realization,
            converged: run.converged,
            achieved_min_delta: run.achieved_min_delta,
            outer_iterations: run.outer_iterations,
            middle_iterations: run.middle_iterations,
            inner_iterations: run.inner_iterations,
            final_residual: run.final_residual,
            objective_trace: run.objective_trace.clone(),
            phase_indices: run.u_final.indices().to_vec(),
            q_bits: run.u_final.q_bits(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ArmSidecar {
    label: String,
    source: PhaseSource,
    config: SystemConfig,
    /// Monte Carlo sub-seed per (realization, snr index).
    mc_seeds: Vec<Vec<u64>>,
    optimizer_runs: Vec<OptimizerSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    library_version: &'a str,
    seed: u64,
    symbols: u64,
    realizations: u32,
    snr_grid_db: &'a [f64],
    snr_definition: &'a str,
    mc_shard_symbols: u64,
    stream_derivation: &'a str,
    arms: Vec<ArmSidecar>,
}

/// Paths and rows produced by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub rows: Vec<SweepRow>,
}

fn format_row(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        row.scheme,
        row.snr_db,
        row.realization,
        row.ber,
        row.ci_halfwidth,
        row.abep_bound,
        row.min_delta
    )
}

/// Runs every arm of the experiment and writes `<name>.csv` plus
/// `<name>.sidecar.json` into the output directory.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;

    let mut all_rows = Vec::new();
    let mut arm_sidecars = Vec::new();
    for arm in &spec.arms {
        let out = sweep_snr(
            &arm.config,
            &arm.source,
            &spec.snr_grid_db,
            spec.symbols,
            spec.realizations,
            spec.seed,
        )?;
        let mut rows = out.rows;
        for row in &mut rows {
            row.scheme = arm.label.clone();
        }
        let mc_seeds = (0..spec.realizations)
            .map(|r| {
                (0..spec.snr_grid_db.len())
                    .map(|s| {
                        derive_seed(
                            spec.seed,
                            &[domain::SWEEP, source_tag(&arm.source), u64::from(r), s as u64],
                        )
                    })
                    .collect()
            })
            .collect();
        let optimizer_runs = out
            .optimizer_runs
            .iter()
            .enumerate()
            .filter_map(|(r, run)| {
                run.as_ref()
                    .map(|run| OptimizerSummary::from_run(r as u32, run))
            })
            .collect();
        arm_sidecars.push(ArmSidecar {
            label: arm.label.clone(),
            source: arm.source.clone(),
            config: arm.config.clone(),
            mc_seeds,
            optimizer_runs,
        });
        all_rows.extend(rows);
    }

    let csv_path = spec.out_dir.join(format!("{}.csv", spec.name));
    let mut csv = String::with_capacity(64 * (all_rows.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &all_rows {
        csv.push_str(&format_row(row));
        csv.push('\n');
    }
    fs::File::create(&csv_path)?.write_all(csv.as_bytes())?;

    let sidecar = Sidecar {
        experiment: &spec.name,
        library_version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        symbols: spec.symbols,
        realizations: spec.realizations,
        snr_grid_db: &spec.snr_grid_db,
        snr_definition:
            "snr_db = 10*log10(1/n0), unit symbol energy, path losses normalized so the direct link has unit average power",
        mc_shard_symbols: SHARD_SYMBOLS,
        stream_derivation:
            "mc sub-seed = derive_seed(seed, [SWEEP, scheme_tag, realization, snr_index]); shard b of a sub-seed uses stream(sub_seed, [MONTE_CARLO, b])",
        arms: arm_sidecars,
    };
    let sidecar_path = spec.out_dir.join(format!("{}.sidecar.json", spec.name));
    fs::File::create(&sidecar_path)?
        .write_all(serde_json::to_string_pretty(&sidecar)?.as_bytes())?;

    Ok(RunOutput {
        csv_path,
        sidecar_path,
        rows: all_rows,
    })
}

fn source_tag(source: &PhaseSource) -> u64 {
    match source {
        PhaseSource::Optimized => 1,
        PhaseSource::Random => 2,
        PhaseSource::NoRis => 3,
        PhaseSource::Continuous => 4,
    }
}

/// Reads experiment rows back from a CSV file, reporting malformed content
/// with its line number.
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::CsvParse {
                line: 1,
                reason: format!("unexpected header `{header}`"),
            })
        }
        None => {
            return Err(Error::CsvParse {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::CsvParse {
                line: line_no,
                reason: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::CsvParse {
                line: line_no,
                reason: format!("bad {what} `{s}`: {e}"),
            })
        };
        rows.push(SweepRow {
            scheme: fields[0].to_string(),
            snr_db: parse_f(fields[1], "snr_db")?,
            realization: fields[2].parse().map_err(|e| Error::CsvParse {
                line: line_no,
                reason: format!("bad realization `{}`: {e}", fields[2]),
            })?,
            ber: parse_f(fields[3], "ber")?,
            ci_halfwidth: parse_f(fields[4], "ci_halfwidth")?,
            abep_bound: parse_f(fields[5], "abep_bound")?,
            min_delta: parse_f(fields[6], "min_delta")?,
        });
    }
    Ok(rows)
}

/// Mean curve of one scheme across realizations.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeCurve {
    pub scheme: String,
    /// Per SNR point: (snr_db, mean ber, mean ci, mean bound, estimated
    /// error count across realizations).
    pub points: Vec<CurvePoint>,
    /// SNR at which the mean curve crosses [`TARGET_BER`], by log-linear
    /// interpolation, when it does.
    pub snr_at_target: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub ber: f64,
    pub ci: f64,
    pub abep_bound: f64,
    /// Bit errors behind the estimate, inferred from the interval width.
    pub errors: f64,
}

/// One pass/fail trend assertion.
#[derive(Debug, Clone, Serialize)]
pub struct TrendCheck {
    pub description: String,
    pub pass: bool,
}

/// Aggregated summary of one or more experiment CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub curves: Vec<SchemeCurve>,
    /// Scheme labels ordered by ascending mean BER, per SNR point shared by
    /// at least two schemes.
    pub orderings: Vec<(f64, Vec<String>)>,
    pub checks: Vec<TrendCheck>,
    pub target_ber: f64,
}

impl TrendReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn curve(&self, scheme: &str) -> Option<&SchemeCurve> {
        self.curves.iter().find(|c| c.scheme == scheme)
    }
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schemes: {}", self.curves.len())?;
        for curve in &self.curves {
            match curve.snr_at_target {
                Some(snr) => writeln!(
                    f,
                    "  {:<18} snr @ ber {:.0e}: {snr:.2} dB",
                    curve.scheme, self.target_ber
                )?,
                None => writeln!(
                    f,
                    "  {:<18} does not cross ber {:.0e} on the grid",
                    curve.scheme, self.target_ber
                )?,
            }
        }
        if !self.orderings.is_empty() {
            writeln!(f, "ordering by mean BER (best first):")?;
            for (snr, order) in &self.orderings {
                writeln!(f, "  {snr:>7.1} dB: {}", order.join(" < "))?;
            }
        }
        for check in &self.checks {
            writeln!(
                f,
                "[{}] {}",
                if check.pass { "PASS" } else { "FAIL" },
                check.description
            )?;
        }
        Ok(())
    }
}

/// Minimum inferred error count for a point to enter ordering comparisons.
pub const MIN_ERRORS_FOR_ORDERING: f64 = 10.0;
/// BER saturation guard: ordering assertions skip points where the better
/// curve is still near the coin-flip plateau.
const SATURATION_BER: f64 = 0.4;

fn infer_errors(ber: f64, ci: f64) -> f64 {
    if ber <= 0.0 || ci <= 0.0 {
        return 0.0;
    }
    // ci = 1.96 sqrt(ber (1 - ber) / bits)  =>  bits = ber (1-ber) (1.96/ci)^2
    let bits = ber * (1.0 - ber) * (1.96 / ci).powi(2);
    ber * bits
}

fn log_interp_crossing(points: &[CurvePoint], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.ber >= target && b.ber <= target && a.ber > 0.0 && b.ber > 0.0 && a.ber != b.ber {
            let la = a.ber.log10();
            let lb = b.ber.log10();
            let lt = target.log10();
            return Some(a.snr_db + (b.snr_db - a.snr_db) * (la - lt) / (la - lb));
        }
    }
    None
}

/// Aggregates CSV rows into mean curves, per-SNR orderings and the
/// trend checks applicable to the labels found.
pub fn summarize(paths: &[PathBuf]) -> Result<TrendReport> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("no input files given".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_rows(p)?);
    }

    // scheme -> snr -> accumulated (ber, ci, bound, count)
    type Accumulator = BTreeMap<String, BTreeMap<i64, (f64, f64, f64, u32)>>;
    let mut acc: Accumulator = BTreeMap::new();
    const SNR_KEY_SCALE: f64 = 1e6;
    for row in &rows {
        let key = (row.snr_db * SNR_KEY_SCALE).round() as i64;
        let slot = acc
            .entry(row.scheme.clone())
            .or_default()
            .entry(key)
            .or_insert((0.0, 0.0, 0.0, 0));
        slot.0 += row.ber;
        slot.1 += row.ci_halfwidth;
        slot.2 += row.abep_bound;
        slot.3 += 1;
    }

    let mut curves: Vec<SchemeCurve> = acc
        .into_iter()
        .map(|(scheme, by_snr)| {
            let points: Vec<CurvePoint> = by_snr
                .into_iter()
                .map(|(key, (ber, ci, bound, n))| {
                    let n = f64::from(n);
                    // Mean of per-realization estimates; the pooled interval
                    // shrinks with the realization count.
                    let ber_mean = ber / n;
                    let ci_mean = ci / n / n.sqrt();
                    let per_real_errors = infer_errors(ber / n, ci / n);
                    CurvePoint {
                        snr_db: key as f64 / SNR_KEY_SCALE,
                        ber: ber_mean,
                        ci: ci_mean,
                        abep_bound: bound / n,
                        errors: per_real_errors * n,
                    }
                })
                .collect();
            let snr_at_target = log_interp_crossing(&points, TARGET_BER);
            SchemeCurve {
                scheme,
                points,
                snr_at_target,
            }
        })
        .collect();
    curves.sort_by(|a, b| a.scheme.cmp(&b.scheme));

    let orderings = build_orderings(&curves);
    let checks = build_checks(&curves);

    Ok(TrendReport {
        curves,
        orderings,
        checks,
        target_ber: TARGET_BER,
    })
}

fn point_at(curve: &SchemeCurve, snr_db: f64) -> Option<CurvePoint> {
    curve
        .points
        .iter()
        .find(|p| (p.snr_db - snr_db).abs() < 1e-6)
        .copied()
}

fn build_orderings(curves: &[SchemeCurve]) -> Vec<(f64, Vec<String>)> {
    if curves.len() < 2 {
        return Vec::new();
    }
    let mut snrs: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.snr_db))
        .collect();
    snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snrs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);

    snrs.into_iter()
        .filter_map(|snr| {
            let mut here: Vec<(&str, f64)> = curves
                .iter()
                .filter_map(|c| point_at(c, snr).map(|p| (c.scheme.as_str(), p.ber)))
                .collect();
            if here.len() < 2 {
                return None;
            }
            here.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            Some((snr, here.into_iter().map(|(s, _)| s.to_string()).collect()))
        })
        .collect()
}

fn suffix_number(label: &str, marker: &str) -> Option<u32> {
    label
        .rsplit_once(marker)
        .and_then(|(_, n)| n.parse::<u32>().ok())
}

/// Highest SNR at which every listed curve still shows at least
/// [`MIN_ERRORS_FOR_ORDERING`] inferred errors.
fn highest_common_measurable_snr(curves: &[&SchemeCurve]) -> Option<f64> {
    let first = curves.first()?;
    let mut candidates: Vec<f64> = first.points.iter().map(|p| p.snr_db).collect();
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    candidates.into_iter().find(|&snr| {
        curves.iter().all(|c| {
            point_at(c, snr).is_some_and(|p| p.errors >= MIN_ERRORS_FOR_ORDERING)
        })
    })
}

fn build_checks(curves: &[SchemeCurve]) -> Vec<TrendCheck> {
    let mut checks = Vec::new();

    // Benchmark ordering: optimized arms by descending RIS size, then the
    // random baseline, then no RIS, compared at the highest SNR where every
    // arm is still measurable.
    let mut by_l: Vec<(&SchemeCurve, u32)> = curves
        .iter()
        .filter(|c| c.scheme.starts_with("optimized_l"))
        .filter_map(|c| suffix_number(&c.scheme, "_l").map(|l| (c, l)))
        .collect();
    if by_l.len() >= 2 {
        by_l.sort_by_key(|&(_, l)| std::cmp::Reverse(l));
        let random = curves.iter().find(|c| c.scheme.starts_with("random"));
        let no_ris = curves.iter().find(|c| c.scheme == "no_ris");
        let mut chain: Vec<&SchemeCurve> = by_l.iter().map(|&(c, _)| c).collect();
        chain.extend(random);
        chain.extend(no_ris);
        match highest_common_measurable_snr(&chain) {
            Some(snr) => {
                let bers: Vec<(String, f64)> = chain
                    .iter()
                    .map(|c| (c.scheme.clone(), point_at(c, snr).unwrap().ber))
                    .collect();
                let pass = bers.windows(2).all(|w| w[0].1 < w[1].1);
                let order = bers
                    .iter()
                    .map(|(s, b)| format!("{s}={b:.3e}"))
                    .collect::<Vec<_>>()
                    .join(" < ");
                checks.push(TrendCheck {
                    description: format!("benchmark ordering at {snr:.1} dB: {order}"),
                    pass,
                });
            }
            None => checks.push(TrendCheck {
                description: "benchmark ordering: no common measurable SNR point".into(),
                pass: false,
            }),
        }
    }

    // Quantization study: BER non-increasing in Q within pooled intervals,
    // and the Q=3-to-continuous gap at the target BER within 1 dB.
    let mut by_q: Vec<(&SchemeCurve, u32)> = curves
        .iter()
        .filter_map(|c| suffix_number(&c.scheme, "_q").map(|q| (c, q)))
        .collect();
    let continuous = curves.iter().find(|c| c.scheme == "continuous");
    if by_q.len() >= 2 {
        by_q.sort_by_key(|&(_, q)| q);
        let mut ladder: Vec<&SchemeCurve> = by_q.iter().map(|&(c, _)| c).collect();
        ladder.extend(continuous);
        let mut pass = true;
        let mut worst: Option<String> = None;
        for w in ladder.windows(2) {
            for p_lo in &w[0].points {
                if let Some(p_hi) = point_at(w[1], p_lo.snr_db) {
                    if p_lo.errors < MIN_ERRORS_FOR_ORDERING
                        || p_hi.errors < MIN_ERRORS_FOR_ORDERING
                    {
                        continue;
                    }
                    if p_hi.ber > p_lo.ber + 3.0 * (p_hi.ci + p_lo.ci) {
                        pass = false;
                        worst = Some(format!(
                            "{} ber {:.3e} exceeds {} ber {:.3e} at {:.1} dB",
                            w[1].scheme, p_hi.ber, w[0].scheme, p_lo.ber, p_lo.snr_db
                        ));
                    }
                }
            }
        }
        checks.push(TrendCheck {
            description: match worst {
                Some(w) => format!("BER non-increasing in quantization bits: {w}"),
                None => "BER non-increasing in quantization bits".into(),
            },
            pass,
        });
        if let (Some(q3), Some(cont)) = (
            by_q.iter().find(|&&(_, q)| q == 3).map(|&(c, _)| c),
            continuous,
        ) {
            match (q3.snr_at_target, cont.snr_at_target) {
                (Some(a), Some(b)) => {
                    let gap = a - b;
                    checks.push(TrendCheck {
                        description: format!(
                            "Q=3 vs continuous SNR gap at ber {TARGET_BER:.0e}: {gap:.3} dB (<= 1 dB)"
                        ),
                        pass: gap.abs() <= 1.0,
                    });
                }
                _ => checks.push(TrendCheck {
                    description: format!(
                        "Q=3 vs continuous SNR gap at ber {TARGET_BER:.0e}: curves do not both cross"
                    ),
                    pass: false,
                }),
            }
        }
    }

    // Receive-array study: more receive antennas strictly lower BER.
    let nr_pair = paired_curves(curves, "_nr");
    if let Some((lo, hi)) = nr_pair {
        checks.push(strict_ordering_check(
            hi, lo,
            format!("{} strictly below {}", hi.scheme, lo.scheme),
        ));
    }

    // Modulation-order study: more transmit antennas strictly raise BER.
    let nt_pair = paired_curves(curves, "_nt");
    if let Some((lo, hi)) = nt_pair {
        checks.push(strict_ordering_check(
            lo, hi,
            format!("{} strictly below {}", lo.scheme, hi.scheme),
        ));
    }

    checks
}

fn paired_curves<'a>(
    curves: &'a [SchemeCurve],
    marker: &str,
) -> Option<(&'a SchemeCurve, &'a SchemeCurve)> {
    let mut tagged: Vec<(&SchemeCurve, u32)> = curves
        .iter()
        .filter_map(|c| suffix_number(&c.scheme, marker).map(|n| (c, n)))
        .collect();
    if tagged.len() != 2 {
        return None;
    }
    tagged.sort_by_key(|&(_, n)| n);
    Some((tagged[0].0, tagged[1].0))
}

/// Asserts `better.ber < worse.ber` strictly at every SNR point where the
/// better curve is measurable and below the saturation plateau.
fn strict_ordering_check(
    better: &SchemeCurve,
    worse: &SchemeCurve,
    description: String,
) -> TrendCheck {
    let mut compared = 0usize;
    let mut pass = true;
    for p_b in &better.points {
        let Some(p_w) = point_at(worse, p_b.snr_db) else {
            continue;
        };
        if p_b.errors < MIN_ERRORS_FOR_ORDERING || p_b.ber > SATURATION_BER {
            continue;
        }
        compared += 1;
        if p_b.ber >= p_w.ber {
            pass = false;
        }
    }
    TrendCheck {
        description: format!("{description} ({compared} SNR points compared)"),
        pass: pass && compared > 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_spec(dir: &Path) -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            arms: vec![
                ExperimentArm {
                    label: "no_ris".into(),
                    config: base_config(2, 2, 4, 1, 7),
                    source: PhaseSource::NoRis,
                },
                ExperimentArm {
                    label: "random_l4".into(),
                    config: base_config(2, 2, 4, 1, 7),
                    source: PhaseSource::Random,
                },
            ],
            snr_grid_db: vec![0.0, 6.0, 12.0],
            symbols: 4_000,
            realizations: 2,
            seed: 11,
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn run_emits_csv_and_sidecar() {
        let dir = tempdir().unwrap();
        let spec = tiny_spec(dir.path());
        let out = run(&spec).unwrap();
        let text = fs::read_to_string(&out.csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.count(), 2 * 3 * 2);

        let sidecar: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out.sidecar_path).unwrap()).unwrap();
        assert_eq!(sidecar["experiment"], "tiny");
        assert_eq!(sidecar["seed"], 11);
        assert_eq!(sidecar["arms"].as_array().unwrap().len(), 2);
        assert_eq!(
            sidecar["arms"][0]["mc_seeds"].as_array().unwrap().len(),
            2
        );
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let a = run(&tiny_spec(dir_a.path())).unwrap();
        let b = run(&tiny_spec(dir_b.path())).unwrap();
        assert_eq!(
            fs::read(&a.csv_path).unwrap(),
            fs::read(&b.csv_path).unwrap()
        );
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let dir = tempdir().unwrap();
        let out = run(&tiny_spec(dir.path())).unwrap();
        let rows = read_rows(&out.csv_path).unwrap();
        assert_eq!(rows, out.rows);
    }

    #[test]
    fn validation_rejects_empty_and_unsorted() {
        let dir = tempdir().unwrap();
        let mut spec = tiny_spec(dir.path());
        spec.arms.clear();
        assert!(spec.validate().is_err());

        let mut spec = tiny_spec(dir.path());
        spec.snr_grid_db = vec![3.0, 1.0];
        assert!(spec.validate().is_err());

        let mut spec = tiny_spec(dir.path());
        spec.arms[1].label = "no_ris".into();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn malformed_csv_reports_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, format!("{CSV_HEADER}\nno_ris,0,0,0.1,0.01,0.2\n")).unwrap();
        match read_rows(&path) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&path, "wrong,header\n").unwrap();
        match read_rows(&path) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected header error, got {other:?}"),
        }
    }

    #[test]
    fn summarize_single_scheme_has_empty_orderings() {
        let dir = tempdir().unwrap();
        let mut spec = tiny_spec(dir.path());
        spec.arms.truncate(1);
        let out = run(&spec).unwrap();
        let report = summarize(&[out.csv_path]).unwrap();
        assert_eq!(report.curves.len(), 1);
        assert!(report.orderings.is_empty());
        assert!(report.checks.is_empty());
    }

    #[test]
    fn summarize_orders_schemes_by_mean_ber() {
        let dir = tempdir().unwrap();
        let out = run(&tiny_spec(dir.path())).unwrap();
        let report = summarize(&[out.csv_path]).unwrap();
        assert_eq!(report.curves.len(), 2);
        assert_eq!(report.orderings.len(), 3);
        for (_, order) in &report.orderings {
            assert_eq!(order.len(), 2);
        }
    }

    #[test]
    fn preset_specs_validate() {
        let dir = tempdir().unwrap();
        for name in ["fig2", "fig3", "fig4", "fig5"] {
            let spec = preset_spec(name, 1, dir.path(), false).unwrap();
            spec.validate().unwrap();
            assert!(!spec.arms.is_empty());
        }
        assert!(preset_spec("fig9", 1, dir.path(), false).is_err());
    }

    #[test]
    fn fig2_preset_has_expected_arms() {
        let dir = tempdir().unwrap();
        let spec = preset_spec("fig2", 5, dir.path(), false).unwrap();
        let labels: Vec<&str> = spec.arms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(
            labels,
            ["optimized_l32", "optimized_l64", "random_l64", "no_ris"]
        );
        let full = preset_spec("fig2", 5, dir.path(), true).unwrap();
        assert!(full.arms.iter().any(|a| a.label == "optimized_l128"));
        for arm in &spec.arms {
            assert_eq!(arm.config.n_tx, 4);
            assert_eq!(arm.config.n_rx, 4);
            assert_eq!(arm.config.seed, 5);
        }
    }

    #[test]
    fn fig3_preset_spans_quantizations() {
        let dir = tempdir().unwrap();
        let spec = preset_spec("fig3", 2, dir.path(), false).unwrap();
        let labels: Vec<&str> = spec.arms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(
            labels,
            ["optimized_q1", "optimized_q2", "optimized_q3", "continuous"]
        );
        assert!(spec.arms.iter().all(|a| a.config.n_ris == 64));
    }

    #[test]
    fn infer_errors_inverts_the_interval_formula() {
        let bits = 200_000.0f64;
        let ber = 3.4e-3;
        let ci = 1.96 * (ber * (1.0 - ber) / bits).sqrt();
        let errors = infer_errors(ber, ci);
        assert!((errors - ber * bits).abs() < 1e-6 * ber * bits);
    }
}
