//! Quadratic-form coefficients of the pairwise distances.
//!
//! For antenna pair (i, j) the squared column distance of the effective
//! channel is `||a + B v||^2` with `a = h_i - h_j` and
//! `B = G (diag(f_i) - diag(f_j))`, which expands to the quadratic
//! `v^H R v + 2 Re{c v} + m` with `R = B^H B`, `c = a^H B`, `m = ||a||^2`.
//! The convex term `v^H R v` is what the SCA step linearizes.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::channel::ChannelSet;

/// Distance coefficients of one unordered antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    /// 1-based antenna pair, lexicographically ordered.
    pub pair: (usize, usize),
    /// Direct-link column difference, length n_rx.
    pub a: DVector<Complex64>,
    /// Reflected-path difference matrix, n_rx x n_ris.
    pub b_mat: DMatrix<Complex64>,
    /// Hermitian PSD Gram matrix `B^H B`, n_ris x n_ris.
    pub r_mat: DMatrix<Complex64>,
    /// Row vector `a^H B`, length n_ris.
    pub c_row: RowDVector<Complex64>,
    /// Constant term `||a||^2`.
    pub m: f64,
}

impl PairData {
    /// Distance via the quadratic form `v^H R v + 2 Re{c v} + m`.
    pub fn delta_quadratic(&self, v: &DVector<Complex64>) -> f64 {
        let rv = &self.r_mat * v;
        let vrv: Complex64 = v.iter().zip(rv.iter()).map(|(vi, ri)| vi.conj() * ri).sum();
        let cv: Complex64 = self
            .c_row
            .iter()
            .zip(v.iter())
            .map(|(ci, vi)| ci * vi)
            .sum();
        vrv.re + 2.0 * cv.re + self.m
    }

    /// Distance via the direct norm `||a + B v||^2`.
    pub fn delta_direct(&self, v: &DVector<Complex64>) -> f64 {
        let mut total = 0.0;
        for r in 0..self.a.len() {
            let mut acc = self.a[r];
            for l in 0..v.len() {
                acc += self.b_mat[(r, l)] * v[l];
            }
            total += acc.norm_sqr();
        }
        total
    }
}

/// Builds the coefficients of all `n_tx (n_tx - 1) / 2` unordered pairs.
pub fn build_pair_data(channels: &ChannelSet) -> Vec<PairData> {
    let n_tx = channels.n_tx();
    let n_rx = channels.n_rx();
    let l = channels.n_ris();
    assert!(n_tx >= 2, "need at least two transmit antennas");

    let mut pairs = Vec::with_capacity(n_tx * (n_tx - 1) / 2);
    for i in 0..n_tx {
        for j in (i + 1)..n_tx {
            let a = DVector::from_fn(n_rx, |r, _| {
                channels.h_direct[(r, i)] - channels.h_direct[(r, j)]
            });
            // B[:, l] = (f[l, i] - f[l, j]) * G[:, l]
            let b_mat = DMatrix::from_fn(n_rx, l, |r, k| {
                (channels.f_tx_ris[(k, i)] - channels.f_tx_ris[(k, j)]) * channels.g_ris_rx[(r, k)]
            });
            let r_mat = b_mat.adjoint() * &b_mat;
            let c_row = a.adjoint() * &b_mat;
            let m = a.norm_squared();
            pairs.push(PairData {
                pair: (i + 1, j + 1),
                a,
                b_mat,
                r_mat,
                c_row,
                m,
            });
        }
    }
    pairs
}

/// Affine minorant of one pair's quadratic distance, tangent at the
/// expansion point: `g(v) = 2 Re{c_n v} + m_n <= delta(v)` for all `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoefficients {
    pub c_n: RowDVector<Complex64>,
    pub m_n: f64,
}

impl SurrogateCoefficients {
    /// Surrogate value `2 Re{c_n v} + m_n`.
    pub fn value(&self, v: &DVector<Complex64>) -> f64 {
        let cv: Complex64 = self.c_n.iter().zip(v.iter()).map(|(ci, vi)| ci * vi).sum();
        2.0 * cv.re + self.m_n
    }
}

/// First-order expansion of the convex term at `v_n`:
/// `c_n = c + v_n^H R`, `m_n = m - v_n^H R v_n`.
pub fn sca_linearize(pd: &PairData, v_n: &DVector<Complex64>) -> SurrogateCoefficients {
    let rv = &pd.r_mat * v_n;
    let vrv: Complex64 = v_n.iter().zip(rv.iter()).map(|(vi, ri)| vi.conj() * ri).sum();
    let c_n = RowDVector::from_fn(pd.c_row.len(), |_, k| pd.c_row[k] + rv[k].conj());
    SurrogateCoefficients {
        c_n,
        m_n: pd.m - vrv.re,
    }
}

/// Smallest pairwise distance at `v`, evaluated through the direct norms.
pub fn min_delta_direct(pairs: &[PairData], v: &DVector<Complex64>) -> f64 {
    pairs
        .iter()
        .map(|p| p.delta_direct(v))
        .fold(f64::INFINITY, f64::min)
}
