use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::compressor::Compressor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Compression similarity: one minus the normalized compression distance
    /// of the two descriptions.
    #[serde(rename = "CS")]
    Cs,
    /// Kolmogorov similarity: `1 / (1 + |C(x) - C(y)|)`.
    #[serde(rename = "KS")]
    Ks,
}

impl Measure {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Measure::Cs => 1,
            Measure::Ks => 2,
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cs" => Ok(Measure::Cs),
            "ks" => Ok(Measure::Ks),
            other => Err(Error::Config(format!("unknown measure '{other}'"))),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Cs => "CS",
            Measure::Ks => "KS",
        })
    }
}

/// `1 - (c_xy - min(c_x, c_y)) / max(c_x, c_y)`, clamped to `[0, 1]`.
/// `c_xy` may be fractional (the mean of both concatenation orders).
pub fn cs_from_lengths(c_x: usize, c_y: usize, c_xy: f64) -> f64 {
    let (lo, hi) = (c_x.min(c_y) as f64, c_x.max(c_y) as f64);
    if hi == 0.0 {
        return 1.0;
    }
    (1.0 - (c_xy - lo) / hi).clamp(0.0, 1.0)
}

pub fn ks_from_lengths(c_x: usize, c_y: usize) -> f64 {
    1.0 / (1.0 + c_x.abs_diff(c_y) as f64)
}

/// Compression similarity of two descriptions, using the single
/// concatenation `x ‖ y`. Two empty descriptions are identical (1).
pub fn compression_similarity(compressor: &Compressor, x: &[u8], y: &[u8]) -> Result<f64> {
    let c_x = compressor.compressed_length(x)?;
    let c_y = compressor.compressed_length(y)?;
    let c_xy = compressor.compressed_length(&[x, y].concat())?;
    if x.is_empty() && y.is_empty() {
        return Ok(1.0);
    }
    Ok(cs_from_lengths(c_x, c_y, c_xy as f64))
}

/// Compression similarity with the concatenation length averaged over both
/// orders, `(C(x ‖ y) + C(y ‖ x)) / 2`. Symmetric in its arguments.
pub fn symmetric_compression_similarity(compressor: &Compressor, x: &[u8], y: &[u8]) -> Result<f64> {
    let c_x = compressor.compressed_length(x)?;
    let c_y = compressor.compressed_length(y)?;
    let c_xy = compressor.compressed_length(&[x, y].concat())?;
    let c_yx = compressor.compressed_length(&[y, x].concat())?;
    if x.is_empty() && y.is_empty() {
        return Ok(1.0);
    }
    Ok(cs_from_lengths(c_x, c_y, (c_xy + c_yx) as f64 / 2.0))
}

/// Kolmogorov similarity of two descriptions; needs no pair compression.
pub fn kolmogorov_similarity(compressor: &Compressor, x: &[u8], y: &[u8]) -> Result<f64> {
    let c_x = compressor.compressed_length(x)?;
    let c_y = compressor.compressed_length(y)?;
    Ok(ks_from_lengths(c_x, c_y))
}
