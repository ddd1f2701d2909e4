//! Exact solver for the per-iteration reflection subproblem.
//!
//! The SCA step leaves a strongly concave nonsmooth problem in `v`:
//!
//! ```text
//! maximize  phi(v) = -rho ||v - u||^2 + min_k { 2 Re{c_k v} + m_k }
//! ```
//!
//! Since the quadratic is common to every branch, the epigraph form
//! "maximize -rho ||v - u||^2 + s  s.t.  s <= 2 Re{c_k v} + m_k" is a QP
//! whose dual collapses onto the K-simplex: with `c(w) = sum_k w_k c_k`,
//!
//! ```text
//! minimize_{w in simplex}  g(w) = ||c(w)||^2 / rho + sum_k w_k f_k(u)
//! ```
//!
//! and the primal optimum is recovered as `v* = u + c(w*)^H / rho`. K is the
//! number of antenna pairs (tiny), so the dual QP is solved exactly by an
//! active-set method, and optimality is certified on the primal epigraph KKT
//! system.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use super::pairs::SurrogateCoefficients;
use crate::error::{Error, Result};

/// Scaled residuals of the epigraph-QP KKT system at a candidate solution.
///
/// All three are normalized by the magnitude of the objective terms, so a
/// well-solved subproblem reports residuals near machine precision
/// regardless of the instance scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    /// Gradient stationarity in (v, s) plus multiplier-sign violation.
    pub stationarity: f64,
    /// Epigraph constraint violation `max_k (s - f_k(v))`, nonnegative part.
    pub primal_feasibility: f64,
    /// `max_k w_k (f_k(v) - s)`.
    pub complementary_slackness: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.complementary_slackness)
    }
}

/// Certified solution of one subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    /// Maximizer of the penalized surrogate objective.
    pub v: DVector<Complex64>,
    /// Simplex multipliers of the epigraph constraints.
    pub multipliers: Vec<f64>,
    pub kkt: KktResidual,
    /// Objective value at `v`.
    pub objective: f64,
}

const MAX_ACTIVE_SET_STEPS: usize = 256;

/// Maximizes `-rho ||v - u||^2 + min_k surrogate_k(v)` to KKT residual
/// `tol`. Errors if `rho <= 0`, no surrogates are given, or the certificate
/// cannot be produced within the iteration cap (carrying the best iterate).
pub fn solve_maxmin_subproblem(
    surrogates: &[SurrogateCoefficients],
    u: &DVector<Complex64>,
    rho: f64,
    tol: f64,
) -> Result<SubproblemSolution> {
    if surrogates.is_empty() {
        return Err(Error::InvalidInput("at least one surrogate required".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("penalty weight must be > 0, got {rho}")));
    }
    let l = u.len();
    if let Some(bad) = surrogates.iter().find(|s| s.c_n.len() != l) {
        return Err(Error::DimensionMismatch(format!(
            "surrogate has {} coefficients, expected {l}",
            bad.c_n.len()
        )));
    }
    let k = surrogates.len();

    // Dual objective data: g(w) = w^T A w + b^T w on the simplex.
    let b = DVector::from_fn(k, |i, _| surrogates[i].value(u));
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let dot: Complex64 = surrogates[i]
                .c_n
                .iter()
                .zip(surrogates[j].c_n.iter())
                .map(|(ci, cj)| ci * cj.conj())
                .sum();
            a[(i, j)] = dot.re / rho;
            a[(j, i)] = dot.re / rho;
        }
    }

    let weights = if k == 1 {
        vec![1.0]
    } else {
        solve_simplex_qp(&a, &b)
    };

    let (solution, residual) = assemble(surrogates, u, rho, &weights);
    if residual.max() <= tol {
        Ok(solution)
    } else {
        Err(Error::SubproblemNonConvergence {
            iterations: MAX_ACTIVE_SET_STEPS,
            residual: residual.max(),
            best: solution.v.iter().copied().collect(),
        })
    }
}

/// Active-set minimizer of `w^T A w + b^T w` over the probability simplex.
/// A is PSD; the support system is solved exactly each step.
fn solve_simplex_qp(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let k = b.len();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        + b.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        + 1.0;
    let drop_tol = 1e-13 * scale.max(1.0);

    // Start at the best vertex.
    let start = (0..k)
        .min_by(|&i, &j| {
            let qi = a[(i, i)] + b[i];
            let qj = a[(j, j)] + b[j];
            qi.partial_cmp(&qj).unwrap()
        })
        .unwrap();
    let mut w = vec![0.0f64; k];
    w[start] = 1.0;
    let mut support: Vec<usize> = vec![start];

    for _ in 0..MAX_ACTIVE_SET_STEPS {
        // Equality-constrained optimum on the current support.
        let s = support.len();
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = DVector::zeros(s + 1);
        for (p, &i) in support.iter().enumerate() {
            for (q, &j) in support.iter().enumerate() {
                kkt[(p, q)] = 2.0 * a[(i, j)];
            }
            kkt[(p, s)] = -1.0;
            kkt[(s, p)] = 1.0;
            rhs[p] = -b[i];
        }
        rhs[s] = 1.0;
        let sol = kkt
            .clone()
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| kkt.svd(true, true).solve(&rhs, 1e-12 * scale).unwrap());

        let mut target = vec![0.0f64; k];
        for (p, &i) in support.iter().enumerate() {
            target[i] = sol[p];
        }

        if support.iter().all(|&i| target[i] >= -1e-12) {
            for &i in &support {
                w[i] = target[i].max(0.0);
            }
            // Optimal on this support; look for a violated vertex outside.
            let nu = sol[s];
            let mut worst = None;
            let mut worst_gap = drop_tol;
            for i in 0..k {
                if support.contains(&i) {
                    continue;
                }
                let grad = 2.0 * (0..k).map(|j| a[(i, j)] * w[j]).sum::<f64>() + b[i];
                let gap = nu - grad;
                if gap > worst_gap {
                    worst_gap = gap;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) => support.push(i),
                None => break,
            }
        } else {
            // Step toward the support optimum until a weight hits zero.
            let mut t = 1.0f64;
            let mut blocker = None;
            for &i in &support {
                if target[i] < w[i] {
                    let step = w[i] / (w[i] - target[i]);
                    if step < t {
                        t = step;
                        blocker = Some(i);
                    }
                }
            }
            for &i in &support {
                w[i] += t * (target[i] - w[i]);
                if w[i] < 0.0 {
                    w[i] = 0.0;
                }
            }
            if let Some(i) = blocker {
                w[i] = 0.0;
                support.retain(|&j| j != i);
            } else {
                break;
            }
        }
    }

    // Renormalize against accumulated rounding.
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for x in w.iter_mut() {
            *x /= total;
        }
    }
    w
}

fn assemble(
    surrogates: &[SurrogateCoefficients],
    u: &DVector<Complex64>,
    rho: f64,
    weights: &[f64],
) -> (SubproblemSolution, KktResidual) {
    let l = u.len();
    let mut c_mix: RowDVector<Complex64> = RowDVector::zeros(l);
    for (wk, s) in weights.iter().zip(surrogates) {
        if *wk != 0.0 {
            for i in 0..l {
                c_mix[i] += s.c_n[i] * *wk;
            }
        }
    }
    let v = DVector::from_fn(l, |i, _| u[i] + c_mix[i].conj() / rho);

    let f_vals: Vec<f64> = surrogates.iter().map(|s| s.value(&v)).collect();
    let s_val = f_vals.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let penalty = rho * (&v - u).norm_squared();
    let objective = -penalty + s_val;

    let scale = f_vals
        .iter()
        .fold(penalty.abs().max(1.0), |m, &x| m.max(x.abs()));

    // Gradient of the Lagrangian in v: -2 rho (v - u) + 2 c(w)^H = 0 by
    // construction; recompute to certify.
    let mut stationarity_v = 0.0f64;
    let mut grad_scale = 1.0f64;
    for i in 0..l {
        let g = -2.0 * rho * (v[i] - u[i]) + 2.0 * c_mix[i].conj();
        stationarity_v = stationarity_v.max(g.norm());
        grad_scale = grad_scale.max(2.0 * c_mix[i].norm());
    }
    let weight_sum: f64 = weights.iter().sum();
    let negativity = weights.iter().fold(0.0f64, |m, &x| m.max(-x));
    let stationarity = (stationarity_v / grad_scale)
        .max((weight_sum - 1.0).abs())
        .max(negativity);

    let primal_feasibility = f_vals
        .iter()
        .fold(0.0f64, |m, &f| m.max(s_val - f))
        .max(0.0)
        / scale;
    let complementary_slackness = weights
        .iter()
        .zip(&f_vals)
        .fold(0.0f64, |m, (&w, &f)| m.max(w * (f - s_val).abs()))
        / scale;

    let kkt = KktResidual {
        stationarity,
        primal_feasibility,
        complementary_slackness,
    };
    (
        SubproblemSolution {
            v,
            multipliers: weights.to_vec(),
            kkt,
            objective,
        },
        kkt,
    )
}
