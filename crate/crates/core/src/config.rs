//! Scenario configuration.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// A 2-D position in meters, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }
}

impl From<[f64; 2]> for Position {
    fn from(a: [f64; 2]) -> Self {
        Position { x: a[0], y: a[1] }
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

/// Number of phase-control bits per RIS element.
///
/// `Continuous` is a sentinel for unquantized phases; wherever a concrete
/// alphabet is required it is approximated by [`CONTINUOUS_SURROGATE_BITS`]
/// bits (4096 equally spaced phases).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    Bits(u32),
    Continuous,
}

/// Alphabet size used to stand in for continuous phase control.
pub const CONTINUOUS_SURROGATE_BITS: u32 = 12;

impl PhaseResolution {
    /// Concrete alphabet size in bits.
    pub fn bits(self) -> u32 {
        match self {
            PhaseResolution::Bits(q) => q,
            PhaseResolution::Continuous => CONTINUOUS_SURROGATE_BITS,
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(self, PhaseResolution::Continuous)
    }
}

impl fmt::Display for PhaseResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseResolution::Bits(q) => write!(f, "{q}"),
            PhaseResolution::Continuous => write!(f, "continuous"),
        }
    }
}

impl Serialize for PhaseResolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseResolution::Bits(q) => s.serialize_u32(*q),
            PhaseResolution::Continuous => s.serialize_str("continuous"),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseResolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = PhaseResolution;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a positive integer or the string \"continuous\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                if v == 0 || v > 32 {
                    return Err(E::custom("q_bits must be in 1..=32"));
                }
                Ok(PhaseResolution::Bits(v as u32))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                if v <= 0 {
                    return Err(E::custom("q_bits must be >= 1"));
                }
                self.visit_u64(v as u64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v.eq_ignore_ascii_case("continuous") {
                    Ok(PhaseResolution::Continuous)
                } else {
                    Err(E::custom(format!("unknown q_bits value `{v}`")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Full scenario description: array sizes, RIS size and quantization,
/// geometry, fading and noise parameters, and the RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antenna count; must be a power of two (the antenna index
    /// carries log2(n_tx) bits per symbol).
    pub n_tx: usize,
    /// Receive antenna count.
    pub n_rx: usize,
    /// RIS element count.
    pub n_ris: usize,
    /// Phase-control bits per RIS element, or "continuous".
    pub q_bits: PhaseResolution,
    /// Rician K-factor (linear) of the Tx-RIS and RIS-Rx links.
    pub rician_k: f64,
    /// Path-loss exponent of the direct Tx-Rx link.
    pub alpha_direct: f64,
    /// Path-loss exponent of the Tx-RIS link.
    pub alpha_tx_ris: f64,
    /// Path-loss exponent of the RIS-Rx link.
    pub alpha_ris_rx: f64,
    pub pos_tx: Position,
    pub pos_ris: Position,
    pub pos_rx: Position,
    /// Noise spectral density N0 (linear).
    pub noise_n0: f64,
    /// Master RNG seed.
    pub seed: u64,
}

impl Default for SystemConfig {
    /// The standard evaluation scenario: Tx at (0, 10), RIS at (40, 4),
    /// Rx at (40, 0), Rician factor 3, exponents 2.8 / 2.2 / 2.2.
    fn default() -> Self {
        SystemConfig {
            n_tx: 4,
            n_rx: 4,
            n_ris: 64,
            q_bits: PhaseResolution::Bits(3),
            rician_k: 3.0,
            alpha_direct: 2.8,
            alpha_tx_ris: 2.2,
            alpha_ris_rx: 2.2,
            pos_tx: Position::new(0.0, 10.0),
            pos_ris: Position::new(40.0, 4.0),
            pos_rx: Position::new(40.0, 0.0),
            noise_n0: 1.0,
            seed: 1,
        }
    }
}

impl SystemConfig {
    /// Bits conveyed per SSK symbol.
    pub fn bits_per_symbol(&self) -> u32 {
        self.n_tx.trailing_zeros()
    }

    pub fn validate(&self) -> Result<()> {
        fn fail(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidConfig {
                field,
                reason: reason.into(),
            })
        }
        if self.n_tx < 2 || !self.n_tx.is_power_of_two() {
            return fail("n_tx", format!("must be a power of two >= 2, got {}", self.n_tx));
        }
        if self.n_rx < 1 {
            return fail("n_rx", "must be >= 1");
        }
        if self.n_ris < 1 {
            return fail("n_ris", "must be >= 1");
        }
        if let PhaseResolution::Bits(q) = self.q_bits {
            if q == 0 || q > 32 {
                return fail("q_bits", format!("must be in 1..=32, got {q}"));
            }
        }
        if !self.rician_k.is_finite() || self.rician_k < 0.0 {
            return fail("rician_k", format!("must be finite and >= 0, got {}", self.rician_k));
        }
        for (field, a) in [
            ("alpha_direct", self.alpha_direct),
            ("alpha_tx_ris", self.alpha_tx_ris),
            ("alpha_ris_rx", self.alpha_ris_rx),
        ] {
            if !a.is_finite() || a <= 0.0 {
                return fail(field, format!("must be finite and > 0, got {a}"));
            }
        }
        for (field, p) in [
            ("pos_tx", self.pos_tx),
            ("pos_ris", self.pos_ris),
            ("pos_rx", self.pos_rx),
        ] {
            if !p.x.is_finite() || !p.y.is_finite() {
                return fail(field, "coordinates must be finite");
            }
        }
        for (field, a, b) in [
            ("pos_rx", self.pos_tx, self.pos_rx),
            ("pos_ris", self.pos_tx, self.pos_ris),
            ("pos_ris", self.pos_ris, self.pos_rx),
        ] {
            if a == b {
                return fail(field, "Tx, RIS and Rx positions must be pairwise distinct");
            }
        }
        if !self.noise_n0.is_finite() || self.noise_n0 <= 0.0 {
            return fail("noise_n0", format!("must be finite and > 0, got {}", self.noise_n0));
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "n_tx": 4, "n_rx": 4, "n_ris": 128, "q_bits": 3,
        "rician_k": 3.0,
        "alpha_direct": 2.8, "alpha_tx_ris": 2.2, "alpha_ris_rx": 2.2,
        "pos_tx": [0.0, 10.0], "pos_ris": [40.0, 4.0], "pos_rx": [40.0, 0.0],
        "noise_n0": 0.1, "seed": 42
    }"#;

    #[test]
    fn loads_json_with_exact_field_names() {
        let cfg = SystemConfig::from_json_str(SAMPLE).unwrap();
        assert_eq!(cfg.n_ris, 128);
        assert_eq!(cfg.q_bits, PhaseResolution::Bits(3));
        assert_eq!(cfg.pos_ris, Position::new(40.0, 4.0));
        assert_eq!(cfg.bits_per_symbol(), 2);
    }

    #[test]
    fn continuous_sentinel_round_trips() {
        let json = SAMPLE.replace("\"q_bits\": 3", "\"q_bits\": \"continuous\"");
        let cfg = SystemConfig::from_json_str(&json).unwrap();
        assert!(cfg.q_bits.is_continuous());
        assert_eq!(cfg.q_bits.bits(), CONTINUOUS_SURROGATE_BITS);
        let back = serde_json::to_string(&cfg).unwrap();
        assert!(back.contains("\"continuous\""));
    }

    #[test]
    fn rejects_non_power_of_two_n_tx() {
        let json = SAMPLE.replace("\"n_tx\": 4", "\"n_tx\": 3");
        let err = SystemConfig::from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("n_tx"), "{err}");
    }

    #[test]
    fn rejects_zero_q_bits() {
        let json = SAMPLE.replace("\"q_bits\": 3", "\"q_bits\": 0");
        assert!(SystemConfig::from_json_str(&json).is_err());
    }

    #[test]
    fn rejects_coincident_positions() {
        let json = SAMPLE.replace("\"pos_rx\": [40.0, 0.0]", "\"pos_rx\": [40.0, 4.0]");
        let err = SystemConfig::from_json_str(&json).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn rejects_nonpositive_noise() {
        let json = SAMPLE.replace("\"noise_n0\": 0.1", "\"noise_n0\": 0.0");
        let err = SystemConfig::from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("noise_n0"), "{err}");
    }
}
