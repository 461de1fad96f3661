use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{Observation, RatingMatrix};

/// Root-mean-square error over the held-out entries `truth`.
pub fn rmse(truth: &[Observation], predicted: &HashMap<(usize, usize), f64>) -> Result<f64> {
    rmse_by(truth, |t| predicted.get(&(t.user, t.item)).copied())
}

/// [`rmse`] with predictions supplied by a lookup function.
pub fn rmse_by<F>(truth: &[Observation], mut predict: F) -> Result<f64>
where
    F: FnMut(&Observation) -> Option<f64>,
{
    if truth.is_empty() {
        return Err(Error::Validation("RMSE over an empty test set".into()));
    }
    let mut sum = 0.0;
    for t in truth {
        let p = predict(t).ok_or(Error::MissingPrediction {
            user: t.user,
            item: t.item,
        })?;
        let d = t.rating as f64 - p;
        sum += d * d;
    }
    Ok((sum / truth.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    GlobalMean,
    UserMean,
    ItemMean,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::GlobalMean,
        BaselineKind::UserMean,
        BaselineKind::ItemMean,
    ];
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::GlobalMean => "global_mean",
            BaselineKind::UserMean => "user_mean",
            BaselineKind::ItemMean => "item_mean",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline '{s}'")))
    }
}

/// Mean-based prediction from the training matrix. Empty rows/columns fall
/// back to the global mean, and an empty matrix to the scale midpoint.
pub fn baseline_predict(matrix: &RatingMatrix, kind: BaselineKind, u: usize, o: usize) -> f64 {
    let global = matrix
        .global_mean()
        .unwrap_or_else(|| matrix.scale().midpoint());
    match kind {
        BaselineKind::GlobalMean => global,
        BaselineKind::UserMean => matrix.user_mean(u).unwrap_or(global),
        BaselineKind::ItemMean => matrix.item_mean(o).unwrap_or(global),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::RatingScale;

    #[test]
    fn perfect_predictions() {
        let truth = [Observation::new(0, 0, 3), Observation::new(1, 2, 5)];
        let p = HashMap::from([((0, 0), 3.0), ((1, 2), 5.0)]);
        assert_eq!(rmse(&truth, &p).unwrap(), 0.0);
    }

    #[test]
    fn off_by_one_everywhere() {
        let truth: Vec<_> = (0..4).map(|i| Observation::new(i, 0, 3)).collect();
        let p: HashMap<_, _> = (0..4).map(|i| ((i, 0), if i % 2 == 0 { 2.0 } else { 4.0 })).collect();
        assert_eq!(rmse(&truth, &p).unwrap(), 1.0);
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let truth = [Observation::new(0, 0, 3)];
        assert!(matches!(
            rmse(&truth, &HashMap::new()),
            Err(Error::MissingPrediction { user: 0, item: 0 })
        ));
        assert!(rmse(&[], &HashMap::new()).is_err());
    }

    #[test]
    fn constant_ratings_give_constant_baselines() {
        let t: Vec<_> = [(0, 0), (0, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(u, o)| Observation::new(u, o, 3))
            .collect();
        let m = RatingMatrix::from_triplets(&t, 4, 4, RatingScale::FIVE_STAR).unwrap();
        for kind in BaselineKind::ALL {
            for (u, o) in [(0, 3), (3, 3), (1, 0)] {
                assert_eq!(baseline_predict(&m, kind, u, o), 3.0);
            }
        }
    }

    #[test]
    fn single_rating_user_mean() {
        let m = RatingMatrix::from_triplets(
            &[Observation::new(0, 1, 5), Observation::new(1, 1, 1)],
            2,
            2,
            RatingScale::FIVE_STAR,
        )
        .unwrap();
        assert_eq!(baseline_predict(&m, BaselineKind::UserMean, 0, 0), 5.0);
        assert_eq!(baseline_predict(&m, BaselineKind::ItemMean, 0, 0), 3.0);
    }
}
