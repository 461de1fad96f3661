//! Sparse rating matrices, dataset loading, fold splitting and synthetic
//! data.

mod dataset;
mod folds;
mod io;
mod matrix;
mod synthetic;

pub use dataset::{Dataset, IdMap};
pub use folds::{mask_fold, split_folds, FoldAssignment};
pub use io::{load_csv, load_dataset, load_movielens, write_triplets_csv, CsvOptions, DatasetFormat};
pub use matrix::{co_rated_count, Observation, Rating, RatingMatrix, RatingScale, SparseVec};
pub use synthetic::{generate_synthetic, numerical_rank, RANK_TOLERANCE};
