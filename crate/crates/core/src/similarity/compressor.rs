use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use flate2::{Compress, Compression, FlushCompress, Status};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressionAlgorithm {
    /// zlib stream (RFC 1950): 2-byte header, DEFLATE body, Adler-32 trailer.
    Zlib,
    /// Raw DEFLATE (RFC 1951) without framing.
    Deflate,
}

impl CompressionAlgorithm {
    pub(crate) fn tag(self) -> u8 {
        match self {
            CompressionAlgorithm::Zlib => 1,
            CompressionAlgorithm::Deflate => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(CompressionAlgorithm::Zlib),
            2 => Some(CompressionAlgorithm::Deflate),
            _ => None,
        }
    }
}

impl FromStr for CompressionAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zlib" => Ok(CompressionAlgorithm::Zlib),
            "deflate" => Ok(CompressionAlgorithm::Deflate),
            other => Err(Error::Config(format!("unknown compressor '{other}'"))),
        }
    }
}

impl fmt::Display for CompressionAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompressionAlgorithm::Zlib => "zlib",
            CompressionAlgorithm::Deflate => "deflate",
        })
    }
}

/// Which compressor approximates description complexity, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompressorProfile {
    pub algorithm: CompressionAlgorithm,
    pub level: u32,
}

impl Default for CompressorProfile {
    fn default() -> Self {
        CompressorProfile {
            algorithm: CompressionAlgorithm::Zlib,
            level: 9,
        }
    }
}

impl CompressorProfile {
    pub fn new(algorithm: CompressionAlgorithm, level: u32) -> Result<Self> {
        if level > 9 {
            return Err(Error::Config(format!(
                "compression level must be in 0..=9, got {level}"
            )));
        }
        Ok(CompressorProfile { algorithm, level })
    }

    pub fn zlib(level: u32) -> Result<Self> {
        Self::new(CompressionAlgorithm::Zlib, level)
    }
}

struct Deflater {
    profile: CompressorProfile,
    stream: Compress,
    out: Vec<u8>,
}

thread_local! {
    static DEFLATER: RefCell<Option<Deflater>> = const { RefCell::new(None) };
}

fn stream_length(profile: CompressorProfile, data: &[u8]) -> Result<usize> {
    DEFLATER.with(|cell| {
        let mut slot = cell.borrow_mut();
        match slot.as_mut() {
            Some(d) if d.profile == profile => d.stream.reset(),
            _ => {
                *slot = Some(Deflater {
                    profile,
                    stream: Compress::new(
                        Compression::new(profile.level),
                        profile.algorithm == CompressionAlgorithm::Zlib,
                    ),
                    out: Vec::new(),
                })
            }
        }
        let d = slot.as_mut().unwrap();
        d.out.clear();
        d.out.reserve(data.len() + data.len() / 8 + 64);
        loop {
            let consumed = d.stream.total_in() as usize;
            let status = d
                .stream
                .compress_vec(&data[consumed..], &mut d.out, FlushCompress::Finish)
                .map_err(|e| Error::Compression(e.to_string()))?;
            match status {
                Status::StreamEnd => break,
                Status::Ok | Status::BufError => {
                    let grow = d.out.capacity().max(64);
                    d.out.reserve(grow);
                }
            }
        }
        Ok(d.stream.total_out() as usize)
    })
}

/// Maps byte strings to compressed lengths under one profile, counting how
/// many compressions it has run.
#[derive(Debug)]
pub struct Compressor {
    profile: CompressorProfile,
    calls: AtomicU64,
}

impl Compressor {
    pub fn new(profile: CompressorProfile) -> Self {
        Compressor {
            profile,
            calls: AtomicU64::new(0),
        }
    }

    pub fn profile(&self) -> CompressorProfile {
        self.profile
    }

    /// Length in bytes of the complete compressed stream, framing included.
    pub fn compressed_length(&self, data: &[u8]) -> Result<usize> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        stream_length(self.profile, data)
    }

    pub fn compressions(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Default for Compressor {
    fn default() -> Self {
        Compressor::new(CompressorProfile::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::ZlibEncoder;
    use std::io::Write;

    fn reference_len(data: &[u8], level: u32) -> usize {
        let mut enc = ZlibEncoder::new(Vec::new(), Compression::new(level));
        enc.write_all(data).unwrap();
        enc.finish().unwrap().len()
    }

    #[test]
    fn deterministic_across_calls() {
        let c = Compressor::default();
        let x = b"1:5;2:3;7:4;19:1";
        assert_eq!(c.compressed_length(x).unwrap(), c.compressed_length(x).unwrap());
        assert_eq!(c.compressions(), 2);
    }

    #[test]
    fn empty_input_still_has_framing() {
        let c = Compressor::default();
        // 2-byte header, empty final block, 4-byte Adler-32.
        assert_eq!(c.compressed_length(b"").unwrap(), 8);
        let raw = Compressor::new(CompressorProfile::new(CompressionAlgorithm::Deflate, 9).unwrap());
        assert_eq!(raw.compressed_length(b"").unwrap(), 2);
    }

    #[test]
    fn matches_one_shot_encoder_for_various_sizes() {
        let c = Compressor::default();
        for n in [0usize, 1, 10, 100, 1000, 10_000, 100_000] {
            let data: Vec<u8> = (0..n).map(|i| (i * 7 % 251) as u8 ^ (i / 13) as u8).collect();
            assert_eq!(c.compressed_length(&data).unwrap(), reference_len(&data, 9), "n = {n}");
        }
    }

    #[test]
    fn switching_profiles_on_one_thread() {
        let data = b"3:3;4:4;5:5;6:1;7:2;8:3;9:4".repeat(20);
        let fast = Compressor::new(CompressorProfile::zlib(1).unwrap());
        let best = Compressor::default();
        let a = fast.compressed_length(&data).unwrap();
        let b = best.compressed_length(&data).unwrap();
        assert_eq!(a, reference_len(&data, 1));
        assert_eq!(b, reference_len(&data, 9));
        assert_eq!(fast.compressed_length(&data).unwrap(), a);
    }

    #[test]
    fn level_above_nine_is_rejected() {
        assert!(CompressorProfile::zlib(10).is_err());
    }
}
