//! Recommendation by matrix completion with compression-based similarities.
//!
//! Users and items are serialized to description strings, compressed, and
//! compared either by the normalized compression distance of their
//! concatenation ([`Measure::Cs`]) or by the difference of their compressed
//! lengths ([`Measure::Ks`]). Missing ratings are then filled with a blend of
//! user-based and item-based weighted averages.

pub mod completion;
pub mod error;
pub mod evaluation;
pub mod parallel;
pub mod ratings;
pub mod similarity;

pub use error::{Error, Result};
pub use completion::{CompletionConfig, CompletionModel};
pub use parallel::with_workers;
pub use similarity::Measure;
