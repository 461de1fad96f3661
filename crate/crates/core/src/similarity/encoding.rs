use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::RatingMatrix;

/// Which entities a similarity relates: rows (users) or columns (items).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    User,
    Item,
}

impl Axis {
    pub fn order(self, matrix: &RatingMatrix) -> usize {
        match self {
            Axis::User => matrix.n_users(),
            Axis::Item => matrix.n_items(),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Axis::User => 1,
            Axis::Item => 2,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user" | "users" => Ok(Axis::User),
            "item" | "items" => Ok(Axis::Item),
            other => Err(Error::Config(format!("unknown axis '{other}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::User => "user",
            Axis::Item => "item",
        })
    }
}

/// Appends the description string of one user (row) or item (column) to
/// `out`: `index:rating` pairs in ascending index order joined by `;`, all
/// decimal ASCII. Indices are the dense ones. An entity with no ratings
/// encodes to the empty string.
pub fn encode_entity_into(matrix: &RatingMatrix, axis: Axis, index: usize, out: &mut Vec<u8>) {
    let entries = match axis {
        Axis::User => matrix.row(index),
        Axis::Item => matrix.col(index),
    };
    for (pos, (other, rating)) in entries.iter().enumerate() {
        if pos > 0 {
            out.push(b';');
        }
        write!(out, "{other}:{rating}").expect("writing to a Vec cannot fail");
    }
}

pub fn encode_entity(matrix: &RatingMatrix, axis: Axis, index: usize) -> Vec<u8> {
    let mut out = Vec::new();
    encode_entity_into(matrix, axis, index, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::{Observation, RatingScale};
    use std::collections::HashMap;

    #[test]
    fn empty_profile_is_empty_string() {
        let m = RatingMatrix::empty(2, 3, RatingScale::FIVE_STAR);
        assert!(encode_entity(&m, Axis::User, 1).is_empty());
        assert!(encode_entity(&m, Axis::Item, 2).is_empty());
    }

    #[test]
    fn user_and_item_layouts() {
        let m = RatingMatrix::from_triplets(
            &[
                Observation::new(0, 2, 5),
                Observation::new(0, 7, 3),
                Observation::new(12, 7, 1),
            ],
            13,
            8,
            RatingScale::FIVE_STAR,
        )
        .unwrap();
        assert_eq!(encode_entity(&m, Axis::User, 0), b"2:5;7:3");
        assert_eq!(encode_entity(&m, Axis::Item, 7), b"0:3;12:1");
    }

    /// Every one of the 6^3 possible rows of a 3-column matrix encodes to a
    /// distinct string.
    #[test]
    fn injective_over_all_profiles_on_3x3_grid() {
        let mut seen: HashMap<Vec<u8>, Vec<u8>> = HashMap::new();
        for code in 0..6u32.pow(3) {
            let profile: Vec<u8> = (0..3).map(|k| ((code / 6u32.pow(k)) % 6) as u8).collect();
            let triplets: Vec<_> = profile
                .iter()
                .enumerate()
                .filter(|(_, &r)| r != 0)
                .map(|(o, &r)| Observation::new(0, o, r))
                .collect();
            let m = RatingMatrix::from_triplets(&triplets, 3, 3, RatingScale::new(1, 5).unwrap())
                .unwrap();
            let enc = encode_entity(&m, Axis::User, 0);
            if let Some(prev) = seen.insert(enc.clone(), profile.clone()) {
                panic!("{prev:?} and {profile:?} both encode to {enc:?}");
            }
        }
        assert_eq!(seen.len(), 216);
    }
}
