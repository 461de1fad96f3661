//! Description strings, compressed lengths, and the user/item similarity
//! matrices derived from them.

mod cache;
mod compressor;
mod encoding;
mod matrix;
mod measures;

pub use cache::{build_similarity_cached, SimilarityCache};
pub use compressor::{CompressionAlgorithm, Compressor, CompressorProfile};
pub use encoding::{encode_entity, encode_entity_into, Axis};
pub use matrix::{build_similarity, SimilarityMatrix};
pub use measures::{
    compression_similarity, cs_from_lengths, kolmogorov_similarity, ks_from_lengths,
    symmetric_compression_similarity, Measure,
};
