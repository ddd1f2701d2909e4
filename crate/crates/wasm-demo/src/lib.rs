//! Browser bindings for the RIS-SSK-MIMO simulator.
//!
//! Three interactive entry points, each returning a JSON string for the
//! static page in `www/` to plot:
//!
//! * [`optimize_phases`] — run the penalty-alternating optimizer on one
//!   channel realization and report the objective trace, the final phases
//!   and how the minimum constellation distance compares to the baselines;
//! * [`reliability_curves`] — analytic ABEP union-bound curves over an SNR
//!   grid for the selected schemes, averaged over a few realizations;
//! * [`ber_curve`] — a small seeded Monte Carlo run for one scheme.
//!
//! Sizes are capped to keep a single-threaded browser tab responsive.

use wasm_bindgen::prelude::*;

use ris_ssk_core::channel::realize_channels;
use ris_ssk_core::config::{PhaseResolution, SystemConfig};
use ris_ssk_core::metrics::{abep_union_bound, min_pairwise_delta};
use ris_ssk_core::monte_carlo::{n0_from_snr_db, simulate_ber};
use ris_ssk_core::optimizer::{optimize, random_phase_baseline, OptimizerOptions};
use ris_ssk_core::rng;
use ris_ssk_core::transceiver::DiscretePhaseVector;

const MAX_RIS: usize = 256;
const MAX_POINTS: usize = 64;
const MAX_REALIZATIONS: u32 = 20;
const MAX_SYMBOLS: u64 = 200_000;

fn build_config(l: usize, q_bits: u32, n_tx: usize, n_rx: usize, seed: u64) -> Result<SystemConfig, JsValue> {
    let cfg = SystemConfig {
        n_tx,
        n_rx: n_rx.min(16),
        n_ris: l.min(MAX_RIS),
        q_bits: PhaseResolution::Bits(q_bits.clamp(1, 12)),
        seed,
        ..SystemConfig::default()
    };
    cfg.validate()
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(serde::Serialize)]
struct OptimizeReport {
    objective_trace: Vec<f64>,
    phases: Vec<f64>,
    min_delta_optimized: f64,
    min_delta_random: f64,
    min_delta_ones: f64,
    min_delta_no_ris: f64,
    converged: bool,
    outer_iterations: usize,
    inner_iterations: usize,
}

/// Optimizes the reflection phases of one seeded channel realization.
#[wasm_bindgen]
pub fn optimize_phases(
    l: usize,
    q_bits: u32,
    n_tx: usize,
    n_rx: usize,
    seed: u64,
) -> Result<String, JsValue> {
    let cfg = build_config(l, q_bits, n_tx, n_rx, seed)?;
    let channels = realize_channels(&cfg, 0).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let run = optimize(&channels, &cfg, &OptimizerOptions::default())
        .map_err(|e| JsValue::from_str(&e.to_string()))?;

    let mut rng = rng::stream(cfg.seed, &[0xD0]);
    let random = random_phase_baseline(&channels, cfg.q_bits.bits(), &mut rng);
    let eval = |u: &DiscretePhaseVector| -> Result<f64, JsValue> {
        let h = channels
            .effective(&u.entries())
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        Ok(min_pairwise_delta(&h).0)
    };
    let ones = DiscretePhaseVector::new(vec![0; cfg.n_ris], cfg.q_bits.bits())
        .map_err(|e| JsValue::from_str(&e.to_string()))?;

    to_json(&OptimizeReport {
        objective_trace: run.objective_trace.clone(),
        phases: run.u_final.phases(),
        min_delta_optimized: run.achieved_min_delta,
        min_delta_random: eval(&random)?,
        min_delta_ones: eval(&ones)?,
        min_delta_no_ris: min_pairwise_delta(&channels.h_direct).0,
        converged: run.converged,
        outer_iterations: run.outer_iterations,
        inner_iterations: run.inner_iterations,
    })
}

#[derive(serde::Serialize)]
struct Curve {
    scheme: String,
    snr_db: Vec<f64>,
    values: Vec<f64>,
}

fn phase_for_scheme(
    scheme: &str,
    cfg: &SystemConfig,
    channels: &ris_ssk_core::ChannelSet,
    realization: u64,
) -> Result<Option<DiscretePhaseVector>, JsValue> {
    match scheme {
        "no_ris" => Ok(None),
        "random" => {
            let mut rng = rng::stream(cfg.seed, &[0xD1, realization]);
            Ok(Some(random_phase_baseline(
                channels,
                cfg.q_bits.bits(),
                &mut rng,
            )))
        }
        "ones" => Ok(Some(
            DiscretePhaseVector::new(vec![0; cfg.n_ris], cfg.q_bits.bits())
                .map_err(|e| JsValue::from_str(&e.to_string()))?,
        )),
        "optimized" => {
            let run = optimize(channels, cfg, &OptimizerOptions::default())
                .map_err(|e| JsValue::from_str(&e.to_string()))?;
            Ok(Some(run.u_final))
        }
        other => Err(JsValue::from_str(&format!("unknown scheme `{other}`"))),
    }
}

/// Analytic ABEP union-bound curves for comma-separated schemes
/// (optimized, random, ones, no_ris), averaged over `realizations`.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn reliability_curves(
    l: usize,
    q_bits: u32,
    n_tx: usize,
    n_rx: usize,
    seed: u64,
    snr_start_db: f64,
    snr_step_db: f64,
    points: usize,
    realizations: u32,
    schemes: &str,
) -> Result<String, JsValue> {
    let cfg = build_config(l, q_bits, n_tx, n_rx, seed)?;
    let points = points.clamp(2, MAX_POINTS);
    let realizations = realizations.clamp(1, MAX_REALIZATIONS);
    let grid: Vec<f64> = (0..points)
        .map(|i| snr_start_db + snr_step_db * i as f64)
        .collect();

    let mut curves = Vec::new();
    for scheme in schemes.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mut sums = vec![0.0f64; grid.len()];
        for r in 0..realizations {
            let channels = realize_channels(&cfg, u64::from(r))
                .map_err(|e| JsValue::from_str(&e.to_string()))?;
            let h_eff = match phase_for_scheme(scheme, &cfg, &channels, u64::from(r))? {
                Some(u) => channels
                    .effective(&u.entries())
                    .map_err(|e| JsValue::from_str(&e.to_string()))?,
                None => channels.h_direct.clone(),
            };
            for (slot, &snr) in sums.iter_mut().zip(&grid) {
                let report = abep_union_bound(&h_eff, n0_from_snr_db(snr))
                    .map_err(|e| JsValue::from_str(&e.to_string()))?;
                *slot += report.abep_bound;
            }
        }
        curves.push(Curve {
            scheme: scheme.to_string(),
            snr_db: grid.clone(),
            values: sums
                .into_iter()
                .map(|s| s / f64::from(realizations))
                .collect(),
        });
    }
    to_json(&curves)
}

/// Seeded Monte Carlo BER curve for one scheme.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn ber_curve(
    l: usize,
    q_bits: u32,
    n_tx: usize,
    n_rx: usize,
    seed: u64,
    snr_start_db: f64,
    snr_step_db: f64,
    points: usize,
    symbols: u64,
    scheme: &str,
) -> Result<String, JsValue> {
    let cfg = build_config(l, q_bits, n_tx, n_rx, seed)?;
    let points = points.clamp(2, MAX_POINTS);
    let symbols = symbols.clamp(1_000, MAX_SYMBOLS);
    let channels = realize_channels(&cfg, 0).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let h_eff = match phase_for_scheme(scheme, &cfg, &channels, 0)? {
        Some(u) => channels
            .effective(&u.entries())
            .map_err(|e| JsValue::from_str(&e.to_string()))?,
        None => channels.h_direct.clone(),
    };

    let grid: Vec<f64> = (0..points)
        .map(|i| snr_start_db + snr_step_db * i as f64)
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for (i, &snr) in grid.iter().enumerate() {
        let est = simulate_ber(
            &h_eff,
            n0_from_snr_db(snr),
            symbols,
            rng::derive_seed(seed, &[0xD2, i as u64]),
        )
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
        values.push(est.ber);
    }
    to_json(&vec![Curve {
        scheme: scheme.to_string(),
        snr_db: grid,
        values,
    }])
}
