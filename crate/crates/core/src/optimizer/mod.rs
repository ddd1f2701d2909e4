//! Reflection-phase optimization by penalty-alternating SCA.
//!
//! The design target is the smallest pairwise constellation distance of the
//! effective channel, maximized over the discrete phase alphabet. The
//! discrete constraint `v = u` is relaxed into a growing quadratic penalty
//! `rho ||v - u||^2`; for each penalty weight, a continuous step (SCA over
//! the pairwise quadratics, each subproblem solved exactly) alternates with
//! a per-element projection of `v` onto the alphabet until the iterates
//! settle, and the weight is then multiplied by a constant factor until `v`
//! and `u` coincide.
//!
//! For small weights the continuous step is genuinely unbounded: the
//! pairwise distances are convex in `v`, so ascent can grow `||v||` without
//! limit once the joint curvature exceeds `rho`. The inner loop detects this
//! (norm guard) and hands the diverged iterate straight to projection --
//! only the phase pattern of `v` matters there -- and the stage ends, since
//! no fixed point exists until `rho` has grown past the curvature.

mod pairs;
mod subproblem;

pub use pairs::{build_pair_data, min_delta_direct, sca_linearize, PairData, SurrogateCoefficients};
pub use subproblem::{solve_maxmin_subproblem, KktResidual, SubproblemSolution};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::min_pairwise_delta;
use crate::rng::{domain, stream};
use crate::transceiver::DiscretePhaseVector;

/// Starting point for the continuous reflection vector. All variants are
/// deterministic: random starts draw from streams derived from the config
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VInit {
    /// All-ones vector (phase zero, a member of every alphabet).
    AllOnes,
    /// Best of this many independent random discrete starts.
    RandomRestarts(u32),
    /// All-ones plus this many random starts, keeping the best outcome.
    AllOnesThenRandom(u32),
}

/// Tuning knobs of [`optimize`]. The defaults follow the standard schedule:
/// an initial weight of `1e-3` times the mean constant term of the pairwise
/// quadratics, growth factor 5, threshold `1e-5`, caps 30/50/100.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerOptions {
    /// Initial penalty weight; `None` scales it off the instance.
    pub rho0: Option<f64>,
    /// Multiplicative growth of the penalty weight per outer stage (> 1).
    pub c_growth: f64,
    /// Squared-step convergence threshold shared by all three loops.
    pub epsilon: f64,
    pub max_outer: usize,
    pub max_middle: usize,
    pub max_inner: usize,
    /// KKT residual tolerance of the subproblem solver.
    pub subproblem_tol: f64,
    pub v_init: VInit,
    /// Finish with cyclic single-element exhaustive improvement of the
    /// discrete vector. The penalty loop's phase pull per element is
    /// `|c|/rho`, which cannot cross an alphabet midpoint once the penalty
    /// exceeds the pairwise curvature, so without this step the loop can
    /// stall one step short of a coordinate-wise optimum (for L = 1 it can
    /// miss the global one).
    pub discrete_polish: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            rho0: None,
            c_growth: 5.0,
            epsilon: 1e-5,
            max_outer: 30,
            max_middle: 50,
            max_inner: 100,
            subproblem_tol: 1e-7,
            v_init: VInit::AllOnesThenRandom(3),
            discrete_polish: true,
        }
    }
}

/// Result of one SCA inner loop (continuous step at fixed penalty weight).
#[derive(Debug, Clone, PartialEq)]
pub struct InnerLoopOutcome {
    pub v: DVector<Complex64>,
    /// True penalized objective at the start point and after every
    /// iteration. Non-decreasing by the minorize-maximize construction.
    pub objective_trace: Vec<f64>,
    /// Squared step dropped below the threshold before the cap.
    pub converged: bool,
    /// Norm guard tripped: the subproblem is unbounded at this weight.
    pub diverged: bool,
    pub iterations: usize,
}

/// Iteration counters and per-stage traces of one [`optimize`] run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTrace {
    pub rho: f64,
    /// Penalized objective after each alternating (v, u) update; Lemma-style
    /// monotone non-decreasing within the stage.
    pub middle_objectives: Vec<f64>,
    /// True-objective trace of every inner SCA loop of this stage.
    pub inner_traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub u_final: DiscretePhaseVector,
    /// Smallest pairwise distance of the effective channel at `u_final`.
    pub achieved_min_delta: f64,
    /// Penalized objective after every middle iteration, all stages
    /// concatenated.
    pub objective_trace: Vec<f64>,
    pub stages: Vec<StageTrace>,
    pub outer_iterations: usize,
    pub middle_iterations: usize,
    pub inner_iterations: usize,
    /// Outer stop `||v - u||^2 <= epsilon` was reached before the cap.
    pub converged: bool,
    /// `||v - u||^2` at exit.
    pub final_residual: f64,
}

/// Norm guard for the unbounded-stage detection, relative to
/// `max(1, ||u||^2)`. While the iterate grows it acts as a power iteration
/// on the weighted curvature, so the direction reached at the guard is the
/// useful output of an unbounded stage; magnitude beyond this adds nothing
/// and only delays the contraction once the penalty weight has caught up.
/// The guard only fires while the norm is increasing: a later inner loop
/// started from a huge iterate under a large weight contracts through the
/// same region and must be allowed to finish.
const DIVERGENCE_NORM_FACTOR: f64 = 1e12;

fn penalized_objective(
    pairs: &[PairData],
    v: &DVector<Complex64>,
    u: &DVector<Complex64>,
    rho: f64,
) -> f64 {
    min_delta_direct(pairs, v) - rho * (v - u).norm_squared()
}

/// Runs linearize-and-solve steps from `v_init` until the squared step drops
/// to `epsilon`, the iteration cap is reached, or the norm guard trips.
pub fn sca_inner_loop(
    pairs: &[PairData],
    u: &DVector<Complex64>,
    rho: f64,
    epsilon: f64,
    v_init: &DVector<Complex64>,
    max_inner: usize,
    subproblem_tol: f64,
) -> InnerLoopOutcome {
    let mut v = v_init.clone();
    let mut trace = vec![penalized_objective(pairs, &v, u, rho)];
    let guard = DIVERGENCE_NORM_FACTOR * u.norm_squared().max(1.0);
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    let mut prev_norm2 = v.norm_squared();

    for _ in 0..max_inner {
        iterations += 1;
        let surrogates: Vec<SurrogateCoefficients> =
            pairs.iter().map(|p| sca_linearize(p, &v)).collect();
        let v_next = match solve_maxmin_subproblem(&surrogates, u, rho, subproblem_tol) {
            Ok(sol) => sol.v,
            Err(Error::SubproblemNonConvergence { best, .. }) => DVector::from_vec(best),
            Err(_) => break,
        };
        let step = (&v_next - &v).norm_squared();
        let objective = penalized_objective(pairs, &v_next, u, rho);
        let norm2 = v_next.norm_squared();
        let growing = norm2 > prev_norm2;
        prev_norm2 = norm2;
        v = v_next;
        trace.push(objective);
        if !objective.is_finite() || (growing && norm2 > guard) {
            diverged = true;
            break;
        }
        if step <= epsilon {
            converged = true;
            break;
        }
    }

    InnerLoopOutcome {
        v,
        objective_trace: trace,
        converged,
        diverged,
        iterations,
    }
}

/// Projects each entry onto the nearest `2^q`-point phase under circular
/// angular distance, discarding amplitude. Zero entries map to phase 0; an
/// exact midpoint tie goes to the smaller alphabet phase.
pub fn project_discrete(v: &DVector<Complex64>, q_bits: u32) -> DiscretePhaseVector {
    assert!((1..=32).contains(&q_bits), "q_bits must be in 1..=32");
    let size = 1i64 << q_bits;
    let step = 2.0 * PI / size as f64;
    let indices = v
        .iter()
        .map(|z| {
            if z.norm_sqr() == 0.0 {
                return 0u32;
            }
            let t = z.arg() / step;
            let lo = t.floor();
            let frac = t - lo;
            let raw = if frac > 0.5 {
                lo as i64 + 1
            } else if frac < 0.5 {
                lo as i64
            } else {
                // Exact midpoint: the smaller mapped phase wins.
                let a = (lo as i64).rem_euclid(size);
                let b = (lo as i64 + 1).rem_euclid(size);
                a.min(b)
            };
            raw.rem_euclid(size) as u32
        })
        .collect();
    DiscretePhaseVector::new(indices, q_bits).expect("indices reduced into the alphabet")
}

/// Maximizes the minimum pairwise distance over the discrete alphabet by the
/// penalty-alternating SCA schedule. The returned phase vector is always
/// feasible (every phase in the alphabet) regardless of the convergence flag.
pub fn optimize(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &OptimizerOptions,
) -> Result<OptimizeResult> {
    let q = config.q_bits.bits();
    let l = channels.n_ris();
    let pairs = build_pair_data(channels);

    let ones = || DVector::from_element(l, Complex64::new(1.0, 0.0));
    let random_start = |r: u32| {
        let mut rng = stream(config.seed, &[domain::OPTIMIZER_INIT, u64::from(r)]);
        DiscretePhaseVector::random(l, q, &mut rng).entries()
    };
    let starts: Vec<DVector<Complex64>> = match options.v_init {
        VInit::AllOnes => vec![ones()],
        VInit::RandomRestarts(restarts) => {
            (0..restarts.max(1)).map(random_start).collect()
        }
        VInit::AllOnesThenRandom(restarts) => std::iter::once(ones())
            .chain((0..restarts).map(random_start))
            .collect(),
    };

    let mut best: Option<OptimizeResult> = None;
    for v0 in starts {
        let run = run_schedule(channels, &pairs, q, v0, options)?;
        let better = best
            .as_ref()
            .map(|b| run.achieved_min_delta > b.achieved_min_delta)
            .unwrap_or(true);
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

fn run_schedule(
    channels: &ChannelSet,
    pairs: &[PairData],
    q_bits: u32,
    v0: DVector<Complex64>,
    options: &OptimizerOptions,
) -> Result<OptimizeResult> {
    if !(options.c_growth > 1.0) {
        return Err(Error::InvalidInput(format!(
            "penalty growth factor must exceed 1, got {}",
            options.c_growth
        )));
    }
    if !(options.epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "convergence threshold must be > 0, got {}",
            options.epsilon
        )));
    }

    let mean_m = pairs.iter().map(|p| p.m).sum::<f64>() / pairs.len() as f64;
    let mut rho = match options.rho0 {
        Some(r) if r > 0.0 => r,
        Some(r) => {
            return Err(Error::InvalidInput(format!(
                "initial penalty weight must be > 0, got {r}"
            )))
        }
        None => {
            let scaled = 1e-3 * mean_m;
            if scaled > 0.0 {
                scaled
            } else {
                1e-3
            }
        }
    };

    let mut v = v0;
    let mut u = project_discrete(&v, q_bits);
    let mut stages = Vec::new();
    let mut converged = false;
    let mut outer_iterations = 0;
    let mut middle_iterations = 0;
    let mut inner_iterations = 0;
    let mut residual = f64::INFINITY;

    for _ in 0..options.max_outer {
        outer_iterations += 1;
        let mut stage = StageTrace {
            rho,
            middle_objectives: Vec::new(),
            inner_traces: Vec::new(),
        };
        let mut u_entries = u.entries();
        for _ in 0..options.max_middle {
            middle_iterations += 1;
            let inner = sca_inner_loop(
                pairs,
                &u_entries,
                rho,
                options.epsilon,
                &v,
                options.max_inner,
                options.subproblem_tol,
            );
            inner_iterations += inner.iterations;
            let step = (&inner.v - &v).norm_squared();
            v = inner.v;
            u = project_discrete(&v, q_bits);
            u_entries = u.entries();
            stage
                .middle_objectives
                .push(penalized_objective(pairs, &v, &u_entries, rho));
            stage.inner_traces.push(inner.objective_trace);
            if inner.diverged {
                // No fixed point at this weight; grow rho.
                break;
            }
            if step <= options.epsilon {
                break;
            }
        }
        stages.push(stage);

        residual = (&v - &u_entries).norm_squared();
        if residual <= options.epsilon {
            converged = true;
            break;
        }
        rho *= options.c_growth;
    }

    if options.discrete_polish {
        u = polish_discrete(pairs, &u);
    }

    let h_eff = channels.effective(&u.entries())?;
    let achieved_min_delta = min_pairwise_delta(&h_eff).0;
    let objective_trace = stages
        .iter()
        .flat_map(|s| s.middle_objectives.iter().copied())
        .collect();

    Ok(OptimizeResult {
        u_final: u,
        achieved_min_delta,
        objective_trace,
        stages,
        outer_iterations,
        middle_iterations,
        inner_iterations,
        converged,
        final_residual: residual,
    })
}

const POLISH_SWEEP_CAP: usize = 16;
/// Pair moves are enumerated only for alphabets up to this size in bits.
const POLISH_PAIR_MAX_BITS: u32 = 4;

/// Incremental state of the polish search: residuals `a_k + B_k u` per
/// pair, so testing one candidate move costs O(pairs * n_rx).
struct PolishState<'a> {
    pairs: &'a [PairData],
    alphabet: Vec<Complex64>,
    indices: Vec<u32>,
    residuals: Vec<DVector<Complex64>>,
    current: f64,
}

impl<'a> PolishState<'a> {
    fn new(pairs: &'a [PairData], indices: Vec<u32>, q_bits: u32) -> Self {
        let size = 1u32 << q_bits;
        let alphabet: Vec<Complex64> = (0..size)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f64::from(i) / f64::from(size)))
            .collect();
        let mut state = PolishState {
            pairs,
            alphabet,
            indices,
            residuals: Vec::new(),
            current: 0.0,
        };
        state.rebuild();
        state
    }

    /// Recomputes residuals from scratch, flushing incremental drift.
    fn rebuild(&mut self) {
        self.residuals = self
            .pairs
            .iter()
            .map(|p| {
                let mut r = p.a.clone();
                for (pos, &idx) in self.indices.iter().enumerate() {
                    let w = self.alphabet[idx as usize];
                    for row in 0..r.len() {
                        r[row] += p.b_mat[(row, pos)] * w;
                    }
                }
                r
            })
            .collect();
        self.current = self
            .residuals
            .iter()
            .map(|r| r.norm_squared())
            .fold(f64::INFINITY, f64::min);
    }

    /// Minimum pairwise distance if positions move by the given deltas;
    /// bails out early once it cannot beat `floor`.
    fn probe(&self, moves: &[(usize, Complex64)], floor: f64) -> f64 {
        let mut min_delta = f64::INFINITY;
        for (p, r) in self.pairs.iter().zip(&self.residuals) {
            let mut delta = 0.0;
            for row in 0..r.len() {
                let mut z = r[row];
                for &(pos, dw) in moves {
                    z += p.b_mat[(row, pos)] * dw;
                }
                delta += z.norm_sqr();
            }
            min_delta = min_delta.min(delta);
            if min_delta <= floor {
                break;
            }
        }
        min_delta
    }

    fn apply(&mut self, moves: &[(usize, u32, Complex64)], value: f64) {
        for &(pos, cand, dw) in moves {
            for (p, r) in self.pairs.iter().zip(self.residuals.iter_mut()) {
                for row in 0..r.len() {
                    r[row] += p.b_mat[(row, pos)] * dw;
                }
            }
            self.indices[pos] = cand;
        }
        self.current = value;
    }

    /// One cyclic sweep of single-element moves; true if any improved.
    fn sweep_single(&mut self) -> bool {
        let size = self.alphabet.len() as u32;
        let mut improved = false;
        for pos in 0..self.indices.len() {
            let old = self.alphabet[self.indices[pos] as usize];
            let mut best = (self.indices[pos], self.current, Complex64::ZERO);
            for cand in 0..size {
                if cand == self.indices[pos] {
                    continue;
                }
                let dw = self.alphabet[cand as usize] - old;
                let val = self.probe(&[(pos, dw)], best.1);
                if val > best.1 * (1.0 + 1e-12) {
                    best = (cand, val, dw);
                }
            }
            if best.0 != self.indices[pos] {
                self.apply(&[(pos, best.0, best.2)], best.1);
                improved = true;
            }
        }
        improved
    }

    /// One sweep of coordinated two-element moves; true if any improved.
    fn sweep_pairs(&mut self) -> bool {
        let size = self.alphabet.len() as u32;
        let l = self.indices.len();
        let mut improved = false;
        for i in 0..l {
            for j in (i + 1)..l {
                let old_i = self.alphabet[self.indices[i] as usize];
                let old_j = self.alphabet[self.indices[j] as usize];
                let mut best: Option<(u32, u32, Complex64, Complex64, f64)> = None;
                let mut floor = self.current;
                for ci in 0..size {
                    let dwi = self.alphabet[ci as usize] - old_i;
                    for cj in 0..size {
                        if ci == self.indices[i] && cj == self.indices[j] {
                            continue;
                        }
                        let dwj = self.alphabet[cj as usize] - old_j;
                        let val = self.probe(&[(i, dwi), (j, dwj)], floor);
                        if val > floor * (1.0 + 1e-12) {
                            floor = val;
                            best = Some((ci, cj, dwi, dwj, val));
                        }
                    }
                }
                if let Some((ci, cj, dwi, dwj, val)) = best {
                    self.apply(&[(i, ci, dwi), (j, cj, dwj)], val);
                    improved = true;
                }
            }
        }
        improved
    }
}

/// Deterministic local improvement of the discrete vector: cyclic
/// single-element sweeps to saturation, then (for small alphabets)
/// coordinated pair moves, alternating until neither neighborhood improves
/// the minimum pairwise distance.
fn polish_discrete(pairs: &[PairData], u: &DiscretePhaseVector) -> DiscretePhaseVector {
    let q = u.q_bits();
    let mut state = PolishState::new(pairs, u.indices().to_vec(), q);
    for _ in 0..POLISH_SWEEP_CAP {
        while state.sweep_single() {}
        state.rebuild();
        if q > POLISH_PAIR_MAX_BITS || !state.sweep_pairs() {
            break;
        }
        state.rebuild();
    }
    DiscretePhaseVector::new(state.indices, q).expect("indices stay in the alphabet")
}

/// Default cap on the exhaustive search space, as log2 of the configuration
/// count.
pub const EXHAUSTIVE_CAP_BITS: u32 = 20;

/// Global maximizer of the minimum pairwise distance over the full discrete
/// alphabet, by enumeration of all `2^(q_bits * L)` configurations. Refuses
/// when the space exceeds `2^cap_bits`. Ties break toward the smaller
/// configuration index.
pub fn exhaustive_oracle(
    channels: &ChannelSet,
    q_bits: u32,
    cap_bits: u32,
) -> Result<(DiscretePhaseVector, f64)> {
    assert!((1..=32).contains(&q_bits), "q_bits must be in 1..=32");
    let l = channels.n_ris();
    let total_bits = q_bits as u64 * l as u64;
    if total_bits > u64::from(cap_bits.min(62)) {
        return Err(Error::SearchSpaceTooLarge {
            bits: total_bits as u32,
            cap_bits,
        });
    }
    let pairs = build_pair_data(channels);
    let count = 1u64 << total_bits;
    let alphabet: Vec<Complex64> = (0..(1u64 << q_bits))
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / (1u64 << q_bits) as f64))
        .collect();
    let mask = (1u64 << q_bits) - 1;

    let eval_range = |range: std::ops::Range<u64>| -> (f64, u64) {
        let mut entries = DVector::from_element(l, Complex64::ZERO);
        let mut best = (f64::NEG_INFINITY, 0u64);
        for code in range {
            for (pos, e) in entries.iter_mut().enumerate() {
                *e = alphabet[((code >> (q_bits as u64 * pos as u64)) & mask) as usize];
            }
            let delta = min_delta_direct(&pairs, &entries);
            if delta > best.0 || (delta == best.0 && code < best.1) {
                best = (delta, code);
            }
        }
        best
    };

    let merge = |a: (f64, u64), b: (f64, u64)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };

    #[cfg(feature = "parallel")]
    let (best_delta, best_code) = {
        use rayon::prelude::*;
        let chunk = 1u64 << total_bits.saturating_sub(6).max(10).min(total_bits);
        let starts: Vec<u64> = (0..count).step_by(chunk.max(1) as usize).collect();
        starts
            .par_iter()
            .map(|&s| eval_range(s..(s + chunk).min(count)))
            .reduce(|| (f64::NEG_INFINITY, 0), merge)
    };
    #[cfg(not(feature = "parallel"))]
    let (best_delta, best_code) = eval_range(0..count);

    let _ = merge;
    let indices = (0..l)
        .map(|pos| ((best_code >> (q_bits as u64 * pos as u64)) & mask) as u32)
        .collect();
    Ok((DiscretePhaseVector::new(indices, q_bits)?, best_delta))
}

/// Uniform i.i.d. draw from the phase alphabet; the random-reflection
/// baseline.
pub fn random_phase_baseline(
    channels: &ChannelSet,
    q_bits: u32,
    rng: &mut impl Rng,
) -> DiscretePhaseVector {
    DiscretePhaseVector::random(channels.n_ris(), q_bits, rng)
}
