//! Link-level simulator and reflection optimizer for a discrete-RIS-assisted
//! space-shift-keying MIMO system.
//!
//! The crate covers the full pipeline:
//!
//! * [`channel`] — scenario geometry, path loss, Rayleigh/Rician fading;
//! * [`transceiver`] — SSK encoding, effective channel, ML detection;
//! * [`metrics`] — pairwise distances, CPEP and the ABEP union bound;
//! * [`optimizer`] — penalty-alternating SCA design of the discrete
//!   reflection phases, plus exhaustive and random baselines;
//! * [`monte_carlo`] — seeded BER estimation and SNR sweeps;
//! * [`experiment`] — presets, CSV/JSON emission and trend summaries.
//!
//! Everything is deterministic under a seed: random draws come from named
//! ChaCha8 streams (see [`rng`]), so runs reproduce byte-for-byte across
//! thread counts.

// `!(x > 0.0)` also rejects NaN; a plain `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod monte_carlo;
pub mod optimizer;
pub mod rng;
pub mod transceiver;

pub use channel::{realize_channels, ChannelSet};
pub use config::{PhaseResolution, Position, SystemConfig};
pub use error::{Error, Result};
pub use monte_carlo::{simulate_ber, sweep_snr, BerEstimate, PhaseSource, SweepRow};
pub use optimizer::{optimize, OptimizeResult, OptimizerOptions};
pub use transceiver::{DiscretePhaseVector, PhaseVector, SskSymbol};
