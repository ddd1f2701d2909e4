//! Scenario geometry, large-scale path loss and small-scale fading.
//!
//! The direct Tx-Rx link fades as Rayleigh; the Tx-RIS and RIS-Rx links fade
//! as Rician around a rank-one line-of-sight component built from uniform
//! linear arrays with half-wavelength spacing. Large-scale gains follow the
//! power law `PL_power(d) = d^-alpha` referenced to 1 m and are applied as
//! amplitudes.
//!
//! All gains are rescaled by the direct-link amplitude so the direct channel
//! has unit average power. The same factor divides the end-to-end reflected
//! cascade (split evenly between F and G), so the composite channel is the
//! physical one times a single constant: SNR values shift by a common dB
//! offset and nothing else.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::config::{Position, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{domain, stream};

/// One realization of the three channel matrices, path loss applied, with
/// the unscaled small-scale factors retained for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Direct channel H, n_rx x n_tx.
    pub h_direct: DMatrix<Complex64>,
    /// Tx-to-RIS channel F, n_ris x n_tx.
    pub f_tx_ris: DMatrix<Complex64>,
    /// RIS-to-Rx channel G, n_rx x n_ris.
    pub g_ris_rx: DMatrix<Complex64>,
    /// Small-scale factor of H.
    pub h_small: DMatrix<Complex64>,
    /// Small-scale factor of F.
    pub f_small: DMatrix<Complex64>,
    /// Small-scale factor of G.
    pub g_small: DMatrix<Complex64>,
}

impl ChannelSet {
    pub fn n_tx(&self) -> usize {
        self.h_direct.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.h_direct.nrows()
    }

    pub fn n_ris(&self) -> usize {
        self.f_tx_ris.nrows()
    }
}

pub fn euclidean_distance(p: Position, q: Position) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Amplitude gain `d^(-alpha/2)` of the power law `d^-alpha` at reference
/// distance 1 m.
pub fn path_loss_amplitude(distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "path loss requires a positive distance, got {distance}"
        )));
    }
    Ok(distance.powf(-exponent / 2.0))
}

/// Draws an i.i.d. circularly symmetric complex Gaussian matrix with
/// per-entry variance 1 (0.5 per real component).
pub fn gen_rayleigh(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// Rician fading with K-factor `kappa` around the given unit-modulus LoS
/// matrix: `sqrt(kappa/(1+kappa)) * los + sqrt(1/(1+kappa)) * nlos` with
/// `nlos` as in [`gen_rayleigh`]. Per-entry average power is 1.
pub fn gen_rician(
    rows: usize,
    cols: usize,
    kappa: f64,
    los: &DMatrix<Complex64>,
    rng: &mut impl Rng,
) -> Result<DMatrix<Complex64>> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidInput(format!(
            "rician factor must be finite and >= 0, got {kappa}"
        )));
    }
    if los.nrows() != rows || los.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "los matrix is {}x{}, expected {rows}x{cols}",
            los.nrows(),
            los.ncols()
        )));
    }
    let w_los = (kappa / (1.0 + kappa)).sqrt();
    let w_nlos = (1.0 / (1.0 + kappa)).sqrt();
    let nlos = gen_rayleigh(rows, cols, rng);
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        w_los * los[(r, c)] + w_nlos * nlos[(r, c)]
    }))
}

/// Departure/arrival geometry of one link between two uniform linear arrays.
///
/// All arrays lie along the x axis with half-wavelength spacing, so a unit
/// propagation direction `(dx, dy)/d` produces the per-element phase
/// gradient `pi * dx / d`. Angles here are stored as that sine term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Sine of the departure angle at the source array.
    pub sin_departure: f64,
    /// Sine of the arrival angle at the destination array.
    pub sin_arrival: f64,
}

impl LinkGeometry {
    pub fn between(from: Position, to: Position) -> Self {
        let d = euclidean_distance(from, to);
        LinkGeometry {
            sin_departure: (to.x - from.x) / d,
            sin_arrival: (from.x - to.x) / d,
        }
    }
}

fn steering_vector(len: usize, sin_angle: f64) -> Vec<Complex64> {
    (0..len)
        .map(|k| Complex64::from_polar(1.0, PI * k as f64 * sin_angle))
        .collect()
}

/// Rank-one LoS matrix `a_rx(arrival) * a_tx(departure)^T` for a link from a
/// `cols`-element array to a `rows`-element array. Every entry has modulus 1.
pub fn los_steering_matrix(rows: usize, cols: usize, geometry: LinkGeometry) -> DMatrix<Complex64> {
    let rx = steering_vector(rows, geometry.sin_arrival);
    let tx = steering_vector(cols, geometry.sin_departure);
    DMatrix::from_fn(rows, cols, |r, c| rx[r] * tx[c])
}

/// Large-scale amplitude gains after the direct-link normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSet {
    pub direct: f64,
    pub tx_ris: f64,
    pub ris_rx: f64,
}

impl PathLossSet {
    /// Computes the three raw power-law amplitudes for the configured
    /// geometry, then divides the direct link by itself and the reflected
    /// cascade by the same factor (square root on each hop).
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        let amp_h = path_loss_amplitude(
            euclidean_distance(cfg.pos_tx, cfg.pos_rx),
            cfg.alpha_direct,
        )?;
        let amp_f = path_loss_amplitude(
            euclidean_distance(cfg.pos_tx, cfg.pos_ris),
            cfg.alpha_tx_ris,
        )?;
        let amp_g = path_loss_amplitude(
            euclidean_distance(cfg.pos_ris, cfg.pos_rx),
            cfg.alpha_ris_rx,
        )?;
        let root = amp_h.sqrt();
        Ok(PathLossSet {
            direct: 1.0,
            tx_ris: amp_f / root,
            ris_rx: amp_g / root,
        })
    }
}

/// Applies amplitude gains to small-scale matrices. Linear in each gain.
pub fn apply_path_loss(
    h_small: &DMatrix<Complex64>,
    f_small: &DMatrix<Complex64>,
    g_small: &DMatrix<Complex64>,
    loss: PathLossSet,
) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    (
        h_small.map(|z| z * loss.direct),
        f_small.map(|z| z * loss.tx_ris),
        g_small.map(|z| z * loss.ris_rx),
    )
}

/// Realizes H, F, G for the given configuration and trial index.
///
/// Each matrix is drawn from its own stream derived from
/// `(config.seed, link domain, trial)`, so realizations are reproducible and
/// independent across trials and links.
pub fn realize_channels(cfg: &SystemConfig, trial: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let loss = PathLossSet::from_config(cfg)?;

    let mut rng_h = stream(cfg.seed, &[domain::CHANNEL_DIRECT, trial]);
    let mut rng_f = stream(cfg.seed, &[domain::CHANNEL_TX_RIS, trial]);
    let mut rng_g = stream(cfg.seed, &[domain::CHANNEL_RIS_RX, trial]);

    let h_small = gen_rayleigh(cfg.n_rx, cfg.n_tx, &mut rng_h);
    let los_f = los_steering_matrix(
        cfg.n_ris,
        cfg.n_tx,
        LinkGeometry::between(cfg.pos_tx, cfg.pos_ris),
    );
    let f_small = gen_rician(cfg.n_ris, cfg.n_tx, cfg.rician_k, &los_f, &mut rng_f)?;
    let los_g = los_steering_matrix(
        cfg.n_rx,
        cfg.n_ris,
        LinkGeometry::between(cfg.pos_ris, cfg.pos_rx),
    );
    let g_small = gen_rician(cfg.n_rx, cfg.n_ris, cfg.rician_k, &los_g, &mut rng_g)?;

    let (h_direct, f_tx_ris, g_ris_rx) = apply_path_loss(&h_small, &f_small, &g_small, loss);
    Ok(ChannelSet {
        h_direct,
        f_tx_ris,
        g_ris_rx,
        h_small,
        f_small,
        g_small,
    })
}
