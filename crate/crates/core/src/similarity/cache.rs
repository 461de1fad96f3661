//! On-disk cache for built similarity matrices.
//!
//! File layout (little endian): magic `KSIM`, format version `u8`, axis
//! tag, measure tag, algorithm tag, level `u8`, order `u64`, the 32-byte
//! dataset hash, then `order²` `f64` values in row-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ratings::RatingMatrix;
use crate::similarity::compressor::{CompressionAlgorithm, Compressor, CompressorProfile};
use crate::similarity::encoding::Axis;
use crate::similarity::matrix::{build_similarity, SimilarityMatrix};
use crate::similarity::measures::Measure;

const MAGIC: &[u8; 4] = b"KSIM";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 8 + 32;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct SimilarityCache {
    dir: PathBuf,
}

impl SimilarityCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SimilarityCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(
        &self,
        dataset_hash: &[u8; 32],
        axis: Axis,
        measure: Measure,
        profile: CompressorProfile,
    ) -> PathBuf {
        self.dir.join(format!(
            "{}-{axis}-{measure}-{}{}.ksim",
            &hex(dataset_hash)[..24],
            profile.algorithm,
            profile.level
        ))
    }

    pub fn load(
        &self,
        dataset_hash: &[u8; 32],
        axis: Axis,
        measure: Measure,
        profile: CompressorProfile,
    ) -> Result<Option<SimilarityMatrix>> {
        let path = self.path_for(dataset_hash, axis, measure, profile);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let bad = |message: &str| Error::Cache {
            path: path.clone(),
            message: message.to_string(),
        };
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC || bytes[4] != VERSION {
            return Err(bad("not a similarity cache file"));
        }
        let tags = (bytes[5], bytes[6], bytes[7], bytes[8] as u32);
        let algorithm = CompressionAlgorithm::from_tag(tags.2);
        if tags.0 != axis.tag()
            || tags.1 != measure.tag()
            || algorithm != Some(profile.algorithm)
            || tags.3 != profile.level
            || bytes[17..49] != dataset_hash[..]
        {
            return Err(bad("key mismatch"));
        }
        let order = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != order * order * 8 {
            return Err(bad("truncated"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        SimilarityMatrix::from_values(axis, order, values)
            .map(Some)
            .map_err(|e| bad(&e.to_string()))
    }

    pub fn store(
        &self,
        dataset_hash: &[u8; 32],
        measure: Measure,
        profile: CompressorProfile,
        sim: &SimilarityMatrix,
    ) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(dataset_hash, sim.axis(), measure, profile);
        let tmp = path.with_extension("ksim.tmp");
        {
            let mut out = BufWriter::new(fs::File::create(&tmp)?);
            out.write_all(MAGIC)?;
            out.write_all(&[
                VERSION,
                sim.axis().tag(),
                measure.tag(),
                profile.algorithm.tag(),
                profile.level as u8,
            ])?;
            out.write_all(&(sim.order() as u64).to_le_bytes())?;
            out.write_all(dataset_hash)?;
            for v in sim.values() {
                out.write_all(&v.to_le_bytes())?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// [`build_similarity`] behind an optional cache lookup.
pub fn build_similarity_cached(
    matrix: &RatingMatrix,
    axis: Axis,
    measure: Measure,
    compressor: &Compressor,
    cache: Option<&SimilarityCache>,
) -> Result<SimilarityMatrix> {
    let Some(cache) = cache else {
        return build_similarity(matrix, axis, measure, compressor);
    };
    let hash = matrix.content_hash();
    let profile = compressor.profile();
    if let Some(sim) = cache.load(&hash, axis, measure, profile)? {
        return Ok(sim);
    }
    let sim = build_similarity(matrix, axis, measure, compressor)?;
    cache.store(&hash, measure, profile, &sim)?;
    Ok(sim)
}
