use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A stored rating. `0` is the absent sentinel and never a legal value.
pub type Rating = u8;

/// Inclusive integer rating scale, e.g. 1..=5 for MovieLens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: Rating,
    pub max: Rating,
}

impl RatingScale {
    pub const FIVE_STAR: RatingScale = RatingScale { min: 1, max: 5 };

    pub fn new(min: Rating, max: Rating) -> Result<Self> {
        if min == 0 {
            return Err(Error::Config(
                "rating scale must start at 1 or above, 0 marks an absent rating".into(),
            ));
        }
        if min > max {
            return Err(Error::Config(format!("empty rating scale [{min}, {max}]")));
        }
        Ok(RatingScale { min, max })
    }

    pub fn contains(&self, rating: i64) -> bool {
        rating >= self.min as i64 && rating <= self.max as i64
    }

    pub fn midpoint(&self) -> f64 {
        (self.min as f64 + self.max as f64) / 2.0
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min as f64, self.max as f64)
    }
}

/// One observed entry of a rating matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub user: usize,
    pub item: usize,
    pub rating: Rating,
}

impl Observation {
    pub fn new(user: usize, item: usize, rating: Rating) -> Self {
        Observation { user, item, rating }
    }
}

/// Borrowed view of one row (or column): strictly increasing indices with
/// their ratings.
#[derive(Debug, Clone, Copy)]
pub struct SparseVec<'a> {
    pub indices: &'a [u32],
    pub ratings: &'a [Rating],
}

impl<'a> SparseVec<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Rating)> + 'a {
        self.indices
            .iter()
            .zip(self.ratings)
            .map(|(&i, &r)| (i as usize, r))
    }

    pub fn get(&self, index: usize) -> Option<Rating> {
        self.indices
            .binary_search(&(index as u32))
            .ok()
            .map(|pos| self.ratings[pos])
    }

    pub fn mean(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let sum: u64 = self.ratings.iter().map(|&r| r as u64).sum();
        Some(sum as f64 / self.len() as f64)
    }
}

/// Sparse user × item rating matrix, indexed both by row (CSR) and by
/// column (CSC). Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    n_users: usize,
    n_items: usize,
    scale: RatingScale,
    row_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    row_val: Vec<Rating>,
    col_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    col_val: Vec<Rating>,
}

impl RatingMatrix {
    /// Builds a matrix from `(user, item, rating)` triplets in any order.
    ///
    /// Duplicate `(user, item)` pairs, out-of-range indices and ratings
    /// outside `scale` are rejected.
    pub fn from_triplets(
        triplets: &[Observation],
        n_users: usize,
        n_items: usize,
        scale: RatingScale,
    ) -> Result<Self> {
        if n_users > u32::MAX as usize || n_items > u32::MAX as usize {
            return Err(Error::Validation("matrix dimensions exceed u32 range".into()));
        }
        for t in triplets {
            if t.user >= n_users {
                return Err(Error::Validation(format!(
                    "user index {} out of range (n_users = {n_users})",
                    t.user
                )));
            }
            if t.item >= n_items {
                return Err(Error::Validation(format!(
                    "item index {} out of range (n_items = {n_items})",
                    t.item
                )));
            }
            if !scale.contains(t.rating as i64) {
                return Err(Error::Validation(format!(
                    "rating {} for (user {}, item {}) outside [{}, {}]",
                    t.rating, t.user, t.item, scale.min, scale.max
                )));
            }
        }

        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.user, a.item).cmp(&(b.user, b.item)));
        if let Some(w) = sorted
            .windows(2)
            .find(|w| (w[0].user, w[0].item) == (w[1].user, w[1].item))
        {
            return Err(Error::Validation(format!(
                "duplicate rating for (user {}, item {})",
                w[0].user, w[0].item
            )));
        }

        let nnz = sorted.len();
        let mut row_ptr = vec![0usize; n_users + 1];
        let mut col_ptr = vec![0usize; n_items + 1];
        for t in &sorted {
            row_ptr[t.user + 1] += 1;
            col_ptr[t.item + 1] += 1;
        }
        for u in 0..n_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        for o in 0..n_items {
            col_ptr[o + 1] += col_ptr[o];
        }

        let row_idx: Vec<u32> = sorted.iter().map(|t| t.item as u32).collect();
        let row_val: Vec<Rating> = sorted.iter().map(|t| t.rating).collect();

        // Row-major order visits each column's users in increasing order.
        let mut col_idx = vec![0u32; nnz];
        let mut col_val = vec![0 as Rating; nnz];
        let mut cursor = col_ptr.clone();
        for t in &sorted {
            let pos = cursor[t.item];
            col_idx[pos] = t.user as u32;
            col_val[pos] = t.rating;
            cursor[t.item] += 1;
        }

        Ok(RatingMatrix {
            n_users,
            n_items,
            scale,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    /// An `n_users × n_items` matrix with no observed entries.
    pub fn empty(n_users: usize, n_items: usize, scale: RatingScale) -> Self {
        Self::from_triplets(&[], n_users, n_items, scale).expect("empty matrix is always valid")
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    /// Number of observed entries.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Ratings given by user `u`, by ascending item index. Panics if `u` is
    /// out of range.
    pub fn row(&self, u: usize) -> SparseVec<'_> {
        let (start, end) = (self.row_ptr[u], self.row_ptr[u + 1]);
        SparseVec {
            indices: &self.row_idx[start..end],
            ratings: &self.row_val[start..end],
        }
    }

    /// Ratings received by item `o`, by ascending user index. Panics if `o`
    /// is out of range.
    pub fn col(&self, o: usize) -> SparseVec<'_> {
        let (start, end) = (self.col_ptr[o], self.col_ptr[o + 1]);
        SparseVec {
            indices: &self.col_idx[start..end],
            ratings: &self.col_val[start..end],
        }
    }

    /// Checked lookup: `Ok(None)` for an absent rating, an error when the
    /// indices fall outside the matrix.
    pub fn get(&self, u: usize, o: usize) -> Result<Option<Rating>> {
        if u >= self.n_users {
            return Err(Error::IndexOutOfRange {
                axis: "user",
                index: u,
                size: self.n_users,
            });
        }
        if o >= self.n_items {
            return Err(Error::IndexOutOfRange {
                axis: "item",
                index: o,
                size: self.n_items,
            });
        }
        Ok(self.row(u).get(o))
    }

    /// Rating value with the absent sentinel `0`.
    pub fn value(&self, u: usize, o: usize) -> Rating {
        self.row(u).get(o).unwrap_or(0)
    }

    pub fn is_observed(&self, u: usize, o: usize) -> bool {
        self.row(u).get(o).is_some()
    }

    /// All observed entries in row-major order. Fold assignments index into
    /// this order.
    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.n_users).flat_map(move |u| {
            self.row(u)
                .iter()
                .map(move |(o, r)| Observation::new(u, o, r))
        })
    }

    pub fn user_mean(&self, u: usize) -> Option<f64> {
        self.row(u).mean()
    }

    pub fn item_mean(&self, o: usize) -> Option<f64> {
        self.col(o).mean()
    }

    pub fn global_mean(&self) -> Option<f64> {
        if self.nnz() == 0 {
            return None;
        }
        let sum: u64 = self.row_val.iter().map(|&r| r as u64).sum();
        Some(sum as f64 / self.nnz() as f64)
    }

    /// Same shape and scale, keeping only the entries for which `keep`
    /// returns true.
    pub fn filtered<F>(&self, mut keep: F) -> RatingMatrix
    where
        F: FnMut(usize, &Observation) -> bool,
    {
        let kept: Vec<Observation> = self
            .observations()
            .enumerate()
            .filter(|(pos, obs)| keep(*pos, obs))
            .map(|(_, obs)| obs)
            .collect();
        RatingMatrix::from_triplets(&kept, self.n_users, self.n_items, self.scale)
            .expect("subset of a valid matrix is valid")
    }

    /// Full cross-check of the row and column indexes: every row entry has a
    /// matching column entry and vice versa, indices strictly increase, and
    /// every rating lies in the scale.
    pub fn is_consistent(&self) -> bool {
        let strictly_increasing = |v: &SparseVec<'_>| v.indices.windows(2).all(|w| w[0] < w[1]);
        let in_scale = |v: &SparseVec<'_>| v.ratings.iter().all(|&r| self.scale.contains(r as i64));
        if self.row_idx.len() != self.col_idx.len() {
            return false;
        }
        for u in 0..self.n_users {
            let row = self.row(u);
            if !strictly_increasing(&row) || !in_scale(&row) {
                return false;
            }
            for (o, r) in row.iter() {
                if o >= self.n_items || self.col(o).get(u) != Some(r) {
                    return false;
                }
            }
        }
        for o in 0..self.n_items {
            let col = self.col(o);
            if !strictly_increasing(&col) || !in_scale(&col) {
                return false;
            }
            for (u, r) in col.iter() {
                if u >= self.n_users || self.row(u).get(o) != Some(r) {
                    return false;
                }
            }
        }
        true
    }

    /// SHA-256 over shape, scale and the row-major triplets. Used to key
    /// similarity caches.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.n_users as u64).to_le_bytes());
        hasher.update((self.n_items as u64).to_le_bytes());
        hasher.update([self.scale.min, self.scale.max]);
        for obs in self.observations() {
            hasher.update((obs.user as u32).to_le_bytes());
            hasher.update((obs.item as u32).to_le_bytes());
            hasher.update([obs.rating]);
        }
        hasher.finalize().into()
    }
}

/// Number of indices present in both strictly increasing lists, by
/// sorted-merge intersection.
pub fn co_rated_count(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}
