//! SSK spatial-constellation encoding, effective-channel composition and
//! maximum-likelihood detection.
//!
//! An SSK symbol activates exactly one transmit antenna; the receiver sees
//! one column of the effective channel `H + G diag(v) F` plus noise and
//! recovers the antenna index by nearest-column search. Antenna indices are
//! 1-based throughout, matching the usual constellation numbering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};

/// Maps bit words to antenna indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitMapping {
    /// Natural binary, MSB first: antenna = 1 + word.
    #[default]
    Natural,
    /// Reflected Gray code: antenna = 1 + gray^-1(word).
    Gray,
}

impl BitMapping {
    /// Bit label of a 1-based antenna index.
    pub fn label(self, antenna_index: usize) -> u32 {
        let value = (antenna_index - 1) as u32;
        match self {
            BitMapping::Natural => value,
            BitMapping::Gray => value ^ (value >> 1),
        }
    }

    /// 1-based antenna index for a bit label.
    pub fn antenna(self, label: u32) -> usize {
        match self {
            BitMapping::Natural => label as usize + 1,
            BitMapping::Gray => {
                let mut value = label;
                let mut shift = 1;
                while (label >> shift) != 0 {
                    value ^= label >> shift;
                    shift += 1;
                }
                value as usize + 1
            }
        }
    }

    /// Differing bits between the labels of two antenna indices.
    pub fn hamming(self, i: usize, j: usize) -> u32 {
        (self.label(i) ^ self.label(j)).count_ones()
    }
}

/// Bit count differing between the natural-binary labels of two 1-based
/// antenna indices.
pub fn hamming_bits(i: usize, j: usize) -> u32 {
    BitMapping::Natural.hamming(i, j)
}

/// One SSK symbol: the active antenna and the bit word it conveys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SskSymbol {
    antenna_index: usize,
    bits: Vec<bool>,
}

impl SskSymbol {
    /// 1-based index of the active antenna.
    pub fn antenna_index(&self) -> usize {
        self.antenna_index
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Builds the symbol for a 1-based antenna index under a mapping.
    pub fn from_antenna(antenna_index: usize, n_tx: usize, mapping: BitMapping) -> Result<Self> {
        if !(n_tx >= 2 && n_tx.is_power_of_two()) {
            return Err(Error::InvalidInput(format!(
                "n_tx must be a power of two >= 2, got {n_tx}"
            )));
        }
        if antenna_index == 0 || antenna_index > n_tx {
            return Err(Error::InvalidInput(format!(
                "antenna index {antenna_index} out of range 1..={n_tx}"
            )));
        }
        let width = n_tx.trailing_zeros();
        let label = mapping.label(antenna_index);
        let bits = (0..width).rev().map(|b| (label >> b) & 1 == 1).collect();
        Ok(SskSymbol {
            antenna_index,
            bits,
        })
    }
}

/// Encodes a bit word (MSB first) as an SSK symbol under a mapping. The word
/// length fixes the antenna count as `2^len`.
pub fn encode_bits_with(bits: &[bool], mapping: BitMapping) -> Result<SskSymbol> {
    if bits.is_empty() || bits.len() >= usize::BITS as usize {
        return Err(Error::InvalidInput(format!(
            "bit word length {} unsupported",
            bits.len()
        )));
    }
    let label = bits
        .iter()
        .fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
    Ok(SskSymbol {
        antenna_index: mapping.antenna(label),
        bits: bits.to_vec(),
    })
}

/// Encodes a bit word with the default natural mapping.
pub fn encode_bits(bits: &[bool]) -> Result<SskSymbol> {
    encode_bits_with(bits, BitMapping::Natural)
}

/// Composite channel `H + G diag(v) F` seen by the detector.
pub fn effective_channel(
    h: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    f: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let (n_rx, n_tx) = h.shape();
    let l = v.len();
    if g.shape() != (n_rx, l) || f.shape() != (l, n_tx) {
        return Err(Error::DimensionMismatch(format!(
            "H {}x{}, G {}x{}, F {}x{}, v length {l}",
            n_rx,
            n_tx,
            g.nrows(),
            g.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    let mut out = h.clone();
    // out[:, t] += sum_l v[l] * f[l, t] * g[:, l], accumulated column-major.
    for t in 0..n_tx {
        for k in 0..l {
            let w = v[k] * f[(k, t)];
            if w != Complex64::ZERO {
                for r in 0..n_rx {
                    out[(r, t)] += w * g[(r, k)];
                }
            }
        }
    }
    Ok(out)
}

impl ChannelSet {
    /// Effective channel of this realization under reflection vector `v`.
    pub fn effective(&self, v: &DVector<Complex64>) -> Result<DMatrix<Complex64>> {
        effective_channel(&self.h_direct, &self.g_ris_rx, &self.f_tx_ris, v)
    }
}

/// Transmits a symbol over an effective channel: the active antenna's column
/// plus complex Gaussian noise of per-entry variance `n0`.
pub fn transmit(
    symbol: &SskSymbol,
    h_eff: &DMatrix<Complex64>,
    n0: f64,
    rng: &mut impl Rng,
) -> Result<DVector<Complex64>> {
    if !(n0 >= 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be >= 0, got {n0}")));
    }
    if symbol.antenna_index() > h_eff.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "antenna {} exceeds {} channel columns",
            symbol.antenna_index(),
            h_eff.ncols()
        )));
    }
    let col = h_eff.column(symbol.antenna_index() - 1);
    let sigma = (n0 * 0.5).sqrt();
    Ok(DVector::from_fn(h_eff.nrows(), |r, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        col[r] + Complex64::new(re * sigma, im * sigma)
    }))
}

/// 0-based column index minimizing `||y - column||^2`; ties go to the lowest
/// index. This is the hot path shared by [`ml_detect`] and the Monte Carlo
/// simulator.
pub fn detect_column(y: &DVector<Complex64>, h_eff: &DMatrix<Complex64>) -> usize {
    let mut best = 0usize;
    let mut best_metric = f64::INFINITY;
    for t in 0..h_eff.ncols() {
        let col = h_eff.column(t);
        let mut metric = 0.0;
        for r in 0..h_eff.nrows() {
            metric += (y[r] - col[r]).norm_sqr();
        }
        if metric < best_metric {
            best_metric = metric;
            best = t;
        }
    }
    best
}

/// Maximum-likelihood detection: the symbol whose channel column is nearest
/// to `y` in Euclidean distance, natural bit mapping.
pub fn ml_detect(y: &DVector<Complex64>, h_eff: &DMatrix<Complex64>) -> SskSymbol {
    let idx = detect_column(y, h_eff) + 1;
    SskSymbol::from_antenna(idx, h_eff.ncols(), BitMapping::Natural)
        .expect("channel column count is a valid antenna range")
}

/// A continuous reflection vector with unit-modulus entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(DVector<Complex64>);

impl PhaseVector {
    const MODULUS_TOL: f64 = 1e-9;

    pub fn new(entries: DVector<Complex64>) -> Result<Self> {
        for (i, z) in entries.iter().enumerate() {
            if (z.norm() - 1.0).abs() > Self::MODULUS_TOL {
                return Err(Error::InvalidInput(format!(
                    "entry {i} has modulus {} (unit modulus required)",
                    z.norm()
                )));
            }
        }
        Ok(PhaseVector(entries))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        PhaseVector(DVector::from_iterator(
            phases.len(),
            phases.iter().map(|&t| Complex64::from_polar(1.0, t)),
        ))
    }

    pub fn all_ones(len: usize) -> Self {
        PhaseVector(DVector::from_element(len, Complex64::new(1.0, 0.0)))
    }

    pub fn entries(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A reflection vector restricted to the `2^q`-point phase alphabet
/// `{0, 2pi/2^q, ..., 2pi(2^q - 1)/2^q}`, stored as alphabet indices so
/// membership is exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretePhaseVector {
    indices: Vec<u32>,
    q_bits: u32,
}

impl DiscretePhaseVector {
    pub fn new(indices: Vec<u32>, q_bits: u32) -> Result<Self> {
        if q_bits == 0 || q_bits > 32 {
            return Err(Error::InvalidInput(format!("q_bits must be in 1..=32, got {q_bits}")));
        }
        let size = 1u64 << q_bits;
        if let Some(bad) = indices.iter().find(|&&i| u64::from(i) >= size) {
            return Err(Error::InvalidInput(format!(
                "alphabet index {bad} out of range for q = {q_bits}"
            )));
        }
        Ok(DiscretePhaseVector { indices, q_bits })
    }

    /// Uniform i.i.d. draw from the alphabet.
    pub fn random(len: usize, q_bits: u32, rng: &mut impl Rng) -> Self {
        let size = 1u64 << q_bits;
        DiscretePhaseVector {
            indices: (0..len).map(|_| rng.random_range(0..size) as u32).collect(),
            q_bits,
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn q_bits(&self) -> u32 {
        self.q_bits
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Phase angle of each element in radians.
    pub fn phases(&self) -> Vec<f64> {
        let step = 2.0 * PI / (1u64 << self.q_bits) as f64;
        self.indices.iter().map(|&i| i as f64 * step).collect()
    }

    /// Unit-modulus complex entries.
    pub fn entries(&self) -> DVector<Complex64> {
        let step = 2.0 * PI / (1u64 << self.q_bits) as f64;
        DVector::from_iterator(
            self.indices.len(),
            self.indices
                .iter()
                .map(|&i| Complex64::from_polar(1.0, i as f64 * step)),
        )
    }
}
