use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ratings::matrix::{Observation, RatingMatrix};

/// Partition of a matrix's observed entries into `k` test folds.
///
/// `fold_of[pos]` is the fold (1-based) of the `pos`-th observation in the
/// matrix's row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<u16>,
}

impl FoldAssignment {
    pub fn new(k: usize, fold_of: Vec<u16>) -> Result<Self> {
        if k < 1 || k > u16::MAX as usize {
            return Err(Error::Config(format!("fold count {k} out of range")));
        }
        if let Some(&bad) = fold_of.iter().find(|&&f| f == 0 || f as usize > k) {
            return Err(Error::Validation(format!("fold id {bad} outside 1..={k}")));
        }
        Ok(FoldAssignment { k, fold_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of entries covered; equals the matrix's `nnz`.
    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_of(&self, pos: usize) -> usize {
        self.fold_of[pos] as usize
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f as usize - 1] += 1;
        }
        sizes
    }
}

/// Uniform random partition of the observed entries into `k` folds whose
/// sizes differ by at most one. Deterministic for a given seed.
pub fn split_folds(matrix: &RatingMatrix, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let n = matrix.nnz();
    if k > n {
        return Err(Error::Config(format!(
            "{k} folds requested but only {n} observed entries"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0u16; n];
    for (slot, &pos) in order.iter().enumerate() {
        fold_of[pos] = (slot % k + 1) as u16;
    }
    FoldAssignment::new(k, fold_of)
}

/// Removes the entries of `fold` from `matrix`. Returns the training matrix
/// and the held-out entries in row-major order.
pub fn mask_fold(
    matrix: &RatingMatrix,
    folds: &FoldAssignment,
    fold: usize,
) -> Result<(RatingMatrix, Vec<Observation>)> {
    if fold < 1 || fold > folds.k() {
        return Err(Error::Config(format!("fold {fold} outside 1..={}", folds.k())));
    }
    if folds.len() != matrix.nnz() {
        return Err(Error::Validation(format!(
            "fold assignment covers {} entries, matrix has {}",
            folds.len(),
            matrix.nnz()
        )));
    }
    let mut test = Vec::new();
    let train = matrix.filtered(|pos, obs| {
        if folds.fold_of(pos) == fold {
            test.push(*obs);
            false
        } else {
            true
        }
    });
    Ok((train, test))
}
