//! Pairwise constellation distances, conditional pairwise error probability
//! and the union upper bound on the average bit error probability.
//!
//! For a fixed effective channel, confusing transmit antenna `i` for `j`
//! depends only on `delta = ||col_i - col_j||^2`: the decision statistic is
//! real Gaussian with mean `-delta` and variance `2 n0 delta`, giving the
//! pairwise error probability `Q(sqrt(delta / (2 n0)))`. Summing over ordered
//! pairs weighted by bit differences yields the union bound.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::transceiver::hamming_bits;

/// Gaussian right-tail probability `Q(x) = P[N(0,1) > x]`, computed via the
/// complementary error function (absolute error well below 1e-12 on
/// |x| <= 8).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Squared Euclidean distance between effective-channel columns `i` and `j`
/// (1-based). Symmetric in its arguments; `i == j` is rejected.
pub fn pairwise_delta(h_eff: &DMatrix<Complex64>, i: usize, j: usize) -> Result<f64> {
    let n_tx = h_eff.ncols();
    if i == j {
        return Err(Error::InvalidInput(format!(
            "pairwise distance requires distinct antennas, got ({i}, {j})"
        )));
    }
    if i == 0 || j == 0 || i > n_tx || j > n_tx {
        return Err(Error::InvalidInput(format!(
            "antenna pair ({i}, {j}) out of range 1..={n_tx}"
        )));
    }
    let a = h_eff.column(i - 1);
    let b = h_eff.column(j - 1);
    Ok((0..h_eff.nrows()).map(|r| (a[r] - b[r]).norm_sqr()).sum())
}

/// Conditional pairwise error probability `Q(sqrt(delta / (2 n0)))`.
pub fn cpep(delta: f64, n0: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "squared distance must be >= 0, got {delta}"
        )));
    }
    if !(n0 > 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be > 0, got {n0}")));
    }
    Ok(q_function((delta / (2.0 * n0)).sqrt()))
}

/// Error statistics of one unordered antenna pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PairwiseError {
    /// 1-based antenna pair, lexicographically ordered.
    pub pair: (usize, usize),
    /// Squared column distance.
    pub delta: f64,
    /// Mean of the pairwise decision statistic (`-delta`).
    pub mu_t: f64,
    /// Variance of the pairwise decision statistic (`2 n0 delta`).
    pub sigma_t2: f64,
    /// Pairwise error probability, in [0, 0.5].
    pub cpep: f64,
}

/// Union-bound report for one effective channel at one noise level.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AbepReport {
    /// Per-pair statistics over all unordered pairs.
    pub pairs: Vec<PairwiseError>,
    /// Union upper bound on the average bit error probability.
    pub abep_bound: f64,
    /// Smallest pairwise squared distance.
    pub min_delta: f64,
}

/// Union upper bound on the ABEP of the natural-mapped SSK constellation:
/// sum over ordered pairs of `cpep * hamming / (n_tx * log2(n_tx))`. The
/// double sum is evaluated literally (diagonal terms contribute zero).
pub fn abep_union_bound(h_eff: &DMatrix<Complex64>, n0: f64) -> Result<AbepReport> {
    let n_tx = h_eff.ncols();
    if n_tx < 2 || !n_tx.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "union bound requires a power-of-two antenna count >= 2, got {n_tx}"
        )));
    }
    let bits = n_tx.trailing_zeros() as f64;

    let mut pairs = Vec::with_capacity(n_tx * (n_tx - 1) / 2);
    let mut min_delta = f64::INFINITY;
    for i in 1..=n_tx {
        for j in (i + 1)..=n_tx {
            let delta = pairwise_delta(h_eff, i, j)?;
            pairs.push(PairwiseError {
                pair: (i, j),
                delta,
                mu_t: -delta,
                sigma_t2: 2.0 * n0 * delta,
                cpep: cpep(delta, n0)?,
            });
            min_delta = min_delta.min(delta);
        }
    }

    let mut bound = 0.0;
    for i in 1..=n_tx {
        for j in 1..=n_tx {
            if i == j {
                continue;
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let pe = pairs
                .iter()
                .find(|p| p.pair == (lo, hi))
                .expect("all unordered pairs present");
            bound += pe.cpep * f64::from(hamming_bits(i, j)) / (n_tx as f64 * bits);
        }
    }

    Ok(AbepReport {
        pairs,
        abep_bound: bound,
        min_delta,
    })
}

/// Minimum squared distance over unordered column pairs and its argmin
/// (1-based, lexicographic tie-break).
pub fn min_pairwise_delta(h_eff: &DMatrix<Complex64>) -> (f64, (usize, usize)) {
    let n_tx = h_eff.ncols();
    assert!(n_tx >= 2, "need at least two columns");
    let mut best = f64::INFINITY;
    let mut arg = (1, 2);
    for i in 1..=n_tx {
        for j in (i + 1)..=n_tx {
            let delta = pairwise_delta(h_eff, i, j).expect("indices in range");
            if delta < best {
                best = delta;
                arg = (i, j);
            }
        }
    }
    (best, arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_rayleigh;
    use crate::rng;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    // Reference right-tail values, 20 significant digits.
    #[allow(clippy::excessive_precision)]
    const Q_REFERENCE: &[(f64, f64)] = &[
        (0.0, 0.5),
        (0.5, 0.30853753872598689636),
        (1.0, 0.15865525393145705141),
        (1.7, 0.044565462758543039487),
        (2.0, 0.0227501319481792072),
        (3.0, 0.0013498980316300945267),
        (5.0, 2.8665157187919391167e-7),
        (8.0, 6.2209605742717841235e-16),
        (-1.0, 0.84134474606854294859),
        (-3.0, 0.99865010196836990547),
    ];

    #[test]
    fn q_function_reference_values() {
        for &(x, want) in Q_REFERENCE {
            assert!(
                (q_function(x) - want).abs() <= 1e-12,
                "Q({x}) = {} want {want}",
                q_function(x)
            );
        }
    }

    #[test]
    fn q_function_symmetry() {
        for x in [0.3, 1.7, 2.9] {
            assert_relative_eq!(q_function(x) + q_function(-x), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pairwise_delta_examples() {
        // Columns e_1 and 2 e_1: distance 1.
        let e1 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::ZERO]);
        let h = DMatrix::from_columns(&[e1.clone(), e1.map(|z| z * Complex64::new(2.0, 0.0))]);
        assert_relative_eq!(pairwise_delta(&h, 1, 2).unwrap(), 1.0);
        assert_relative_eq!(
            pairwise_delta(&h, 1, 2).unwrap(),
            pairwise_delta(&h, 2, 1).unwrap()
        );
        let dup = DMatrix::from_columns(&[e1.clone(), e1.clone()]);
        assert_eq!(pairwise_delta(&dup, 1, 2).unwrap(), 0.0);
        assert!(pairwise_delta(&h, 1, 1).is_err());
        assert!(pairwise_delta(&h, 0, 2).is_err());
    }

    #[test]
    fn cpep_examples_and_monotonicity() {
        assert_eq!(cpep(0.0, 1.0).unwrap(), 0.5);
        #[allow(clippy::excessive_precision)]
        let q_one = 0.15865525393145705141;
        assert_relative_eq!(cpep(2.0 * 0.37, 0.37).unwrap(), q_one, max_relative = 1e-12);
        assert!(cpep(1.0, 0.0).is_err());
        assert!(cpep(-1.0, 1.0).is_err());
        // Strictly decreasing in delta, strictly increasing in n0.
        let mut prev = 0.6;
        for delta in [0.0, 0.5, 1.0, 4.0, 9.0] {
            let p = cpep(delta, 0.8).unwrap();
            assert!(p < prev);
            prev = p;
        }
        let mut prev = 0.0;
        for n0 in [0.1, 0.5, 1.0, 10.0] {
            let p = cpep(3.0, n0).unwrap();
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn cpep_matches_direct_simulation_of_decision_statistic() {
        // T = 2 Re{n^H d} - ||d||^2 with n ~ CN(0, n0 I); P(T > 0) vs the
        // closed form over 10^6 draws, within 3 binomial sigma.
        use rand::Rng;
        use rand_distr::StandardNormal;
        let delta = 1.9f64;
        let n0 = 0.7f64;
        let d = (delta / 2.0).sqrt();
        let dvec = [Complex64::new(d, 0.0), Complex64::new(0.0, -d)];
        let mut r = rng::stream(21, &[1]);
        let sigma = (n0 * 0.5).sqrt();
        let trials = 1_000_000u64;
        let mut hits = 0u64;
        for _ in 0..trials {
            let mut cross = Complex64::ZERO;
            for dk in dvec {
                let n = Complex64::new(
                    sigma * r.sample::<f64, _>(StandardNormal),
                    sigma * r.sample::<f64, _>(StandardNormal),
                );
                cross += n.conj() * dk;
            }
            if 2.0 * cross.re - delta > 0.0 {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / trials as f64;
        let p = cpep(delta, n0).unwrap();
        let sigma_hat = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (p_hat - p).abs() <= 3.0 * sigma_hat,
            "p_hat {p_hat} vs p {p} (3 sigma {})",
            3.0 * sigma_hat
        );
    }

    #[test]
    fn union_bound_collapses_for_two_antennas() {
        let mut r = rng::stream(5, &[2]);
        let h = gen_rayleigh(3, 2, &mut r);
        let n0 = 0.4;
        let report = abep_union_bound(&h, n0).unwrap();
        let delta = pairwise_delta(&h, 1, 2).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert_relative_eq!(report.abep_bound, cpep(delta, n0).unwrap(), max_relative = 1e-14);
        assert_eq!(report.min_delta, delta);
    }

    #[test]
    fn union_bound_equal_distances_is_twice_cpep() {
        // Orthonormal columns scaled by c: all six distances equal 2 c^2;
        // the 12 ordered pairs carry total Hamming weight 16, so the bound
        // is (16 / 8) * cpep.
        let c = 1.3;
        let h = DMatrix::from_fn(4, 4, |r, t| {
            if r == t {
                Complex64::new(c, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let n0 = 0.9;
        let report = abep_union_bound(&h, n0).unwrap();
        let pb = cpep(2.0 * c * c, n0).unwrap();
        assert_relative_eq!(report.abep_bound, 2.0 * pb, max_relative = 1e-13);
        assert_relative_eq!(report.min_delta, 2.0 * c * c, max_relative = 1e-13);
    }

    #[test]
    fn union_bound_vanishes_as_noise_vanishes() {
        let mut r = rng::stream(6, &[3]);
        let h = gen_rayleigh(4, 4, &mut r);
        let report = abep_union_bound(&h, 1e-9).unwrap();
        assert!(report.abep_bound < 1e-12, "bound {}", report.abep_bound);
    }

    #[test]
    fn union_bound_invariant_under_global_column_rotation() {
        let mut r = rng::stream(8, &[4]);
        let h = gen_rayleigh(4, 4, &mut r);
        let rot = Complex64::from_polar(1.0, 1.234);
        let rotated = h.map(|z| z * rot);
        let a = abep_union_bound(&h, 0.5).unwrap();
        let b = abep_union_bound(&rotated, 0.5).unwrap();
        assert_relative_eq!(a.abep_bound, b.abep_bound, max_relative = 1e-12);
    }

    #[test]
    fn min_pairwise_delta_examples() {
        // Two identical columns: zero at that pair.
        let e1 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::ZERO]);
        let e2 = DVector::from_vec(vec![Complex64::ZERO, Complex64::new(1.0, 0.0)]);
        let h = DMatrix::from_columns(&[e1.clone(), e2.clone(), e1.clone()]);
        let (val, arg) = min_pairwise_delta(&h);
        assert_eq!(val, 0.0);
        assert_eq!(arg, (1, 3));

        // Orthonormal columns scaled by c: min is 2 c^2.
        let c = 0.7;
        let ortho = DMatrix::from_fn(4, 4, |r, t| {
            if r == t {
                Complex64::new(c, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let (val, _) = min_pairwise_delta(&ortho);
        assert_relative_eq!(val, 2.0 * c * c, max_relative = 1e-13);

        // Random 4x4: matches exhaustive enumeration of the 6 pairs.
        let mut r = rng::stream(10, &[5]);
        let hr = gen_rayleigh(4, 4, &mut r);
        let (val, arg) = min_pairwise_delta(&hr);
        let mut best = f64::INFINITY;
        let mut best_arg = (0, 0);
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                let d = pairwise_delta(&hr, i, j).unwrap();
                if d < best {
                    best = d;
                    best_arg = (i, j);
                }
            }
        }
        assert_eq!(val, best);
        assert_eq!(arg, best_arg);
    }
}
