use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ratings::folds::FoldAssignment;
use crate::ratings::matrix::{Observation, RatingMatrix};

/// Bidirectional map between raw dataset ids and dense 0-based indices.
///
/// Indices follow ascending id order: numeric order when every id parses as
/// an unsigned integer, byte order otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl IdMap {
    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        let numeric: Option<Vec<u64>> = ids.iter().map(|id| id.parse::<u64>().ok()).collect();
        match numeric {
            Some(_) => ids.sort_by_key(|id| id.parse::<u64>().unwrap()),
            None => ids.sort(),
        }
        ids.dedup();
        let lookup = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        IdMap { ids, lookup }
    }

    /// Ids `0..n` rendered as strings; used for generated data.
    pub fn identity(n: usize) -> Self {
        Self::from_ids((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id_of(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// A rating matrix together with its id mappings and, when the source
/// ships them, predefined cross-validation folds.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub matrix: RatingMatrix,
    pub users: IdMap,
    pub items: IdMap,
    pub folds: Option<FoldAssignment>,
}

impl Dataset {
    /// Wraps a matrix whose raw ids are simply its indices.
    pub fn from_matrix(name: impl Into<String>, matrix: RatingMatrix) -> Self {
        Dataset {
            name: name.into(),
            users: IdMap::identity(matrix.n_users()),
            items: IdMap::identity(matrix.n_items()),
            matrix,
            folds: None,
        }
    }

    /// Keeps a seeded uniform sample of `fraction` of the users (at least
    /// one) with all their ratings. Item indices are unchanged; predefined
    /// folds are dropped.
    pub fn subsample_users(&self, fraction: f64, seed: u64) -> Result<Dataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!("user fraction must be in (0, 1], got {fraction}")));
        }
        let n = self.matrix.n_users();
        let keep = ((n as f64 * fraction).round() as usize).clamp(1.min(n), n);
        let mut chosen: Vec<usize> = sample(&mut ChaCha8Rng::seed_from_u64(seed), n, keep).into_vec();
        chosen.sort_unstable();
        let triplets: Vec<Observation> = chosen
            .iter()
            .enumerate()
            .flat_map(|(new, &old)| {
                self.matrix
                    .row(old)
                    .iter()
                    .map(move |(o, r)| Observation::new(new, o, r))
            })
            .collect();
        let matrix = RatingMatrix::from_triplets(&triplets, keep, self.matrix.n_items(), self.matrix.scale())?;
        Ok(Dataset {
            name: format!("{}-users{:.0}pct", self.name, fraction * 100.0),
            matrix,
            users: IdMap::from_ids(chosen.iter().map(|&u| self.users.id_of(u).to_string())),
            items: self.items.clone(),
            folds: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::RatingScale;

    #[test]
    fn numeric_ids_sort_numerically() {
        let ids = IdMap::from_ids(["10", "9", "100", "9"]);
        assert_eq!(ids.ids(), &["9", "10", "100"]);
        assert_eq!(ids.index_of("100"), Some(2));
        let mixed = IdMap::from_ids(["b", "10", "a"]);
        assert_eq!(mixed.ids(), &["10", "a", "b"]);
    }

    #[test]
    fn subsample_keeps_whole_rows() {
        let t: Vec<_> = (0..10)
            .flat_map(|u| (0..3).map(move |o| Observation::new(u, o, ((u + o) % 5 + 1) as u8)))
            .collect();
        let m = RatingMatrix::from_triplets(&t, 10, 3, RatingScale::FIVE_STAR).unwrap();
        let ds = Dataset::from_matrix("toy", m);
        let sub = ds.subsample_users(0.2, 5).unwrap();
        assert_eq!(sub.matrix.n_users(), 2);
        assert_eq!(sub.matrix.nnz(), 6);
        for u in 0..2 {
            let old: usize = sub.users.id_of(u).parse().unwrap();
            assert_eq!(
                sub.matrix.row(u).iter().collect::<Vec<_>>(),
                ds.matrix.row(old).iter().collect::<Vec<_>>()
            );
        }
        assert_eq!(sub.matrix, ds.subsample_users(0.2, 5).unwrap().matrix);
        assert!(ds.subsample_users(0.0, 5).is_err());
    }
}
