//! Hybrid user/item neighborhood completion.
//!
//! A missing rating `(u, o)` is predicted as
//! `alpha * user_term + (1 - alpha) * item_term`, where the user term is the
//! mean of the ratings other users gave `o`, weighted by their similarity to
//! `u` times the squared number of items both rated, and the item term is
//! the mirror image over the items `u` rated.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{IdMap, RatingMatrix};
use crate::similarity::{Axis, SimilarityMatrix};

/// A stage of the chain used when a blend cannot be formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackStage {
    /// Use whichever of the two terms has weight.
    OtherTerm,
    UserMean,
    ItemMean,
    GlobalMean,
    Midpoint,
}

impl FallbackStage {
    pub const DEFAULT_CHAIN: [FallbackStage; 5] = [
        FallbackStage::OtherTerm,
        FallbackStage::UserMean,
        FallbackStage::ItemMean,
        FallbackStage::GlobalMean,
        FallbackStage::Midpoint,
    ];

    fn name(self) -> &'static str {
        match self {
            FallbackStage::OtherTerm => "other_term",
            FallbackStage::UserMean => "user_mean",
            FallbackStage::ItemMean => "item_mean",
            FallbackStage::GlobalMean => "global_mean",
            FallbackStage::Midpoint => "midpoint",
        }
    }
}

impl FromStr for FallbackStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FallbackStage::DEFAULT_CHAIN
            .into_iter()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fallback stage '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    pub alpha: f64,
    pub fallback: Vec<FallbackStage>,
    /// Normalize each term by the similarity mass of *all* other users
    /// (items), not only those who rated the target.
    pub literal_denominator: bool,
}

impl CompletionConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = CompletionConfig {
            alpha,
            ..CompletionConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            alpha: 0.5,
            fallback: FallbackStage::DEFAULT_CHAIN.to_vec(),
            literal_denominator: false,
        }
    }
}

/// One weighted-average term. `value` is meaningless when `weight_mass` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub value: f64,
    pub weight_mass: f64,
}

impl Term {
    fn has_weight(&self) -> bool {
        self.weight_mass > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictionSource {
    Observed,
    UserTerm,
    ItemTerm,
    Blend,
    Fallback(FallbackStage),
}

impl fmt::Display for PredictionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionSource::Observed => f.write_str("observed"),
            PredictionSource::UserTerm => f.write_str("user_term"),
            PredictionSource::ItemTerm => f.write_str("item_term"),
            PredictionSource::Blend => f.write_str("blend"),
            PredictionSource::Fallback(stage) => write!(f, "fallback:{}", stage.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    pub source: PredictionSource,
}

/// Precomputed state for completing one training matrix: the two pairwise
/// weight tables `S[a][b] * co_rated(a, b)^2` (zero diagonal) plus the means
/// used by the fallback chain.
#[derive(Debug)]
pub struct CompletionModel<'a> {
    matrix: &'a RatingMatrix,
    config: CompletionConfig,
    user_weights: Vec<f64>,
    item_weights: Vec<f64>,
    user_weight_totals: Vec<f64>,
    item_weight_totals: Vec<f64>,
    global_mean: Option<f64>,
    predicted: AtomicU64,
}

/// Row `a` of `S ⊙ C²`, where `C[a][b]` counts the entities co-rated by
/// `a` and `b`. `outer(a)` lists what `a` rated; `inner(x)` lists who
/// rated/was rated by `x` on the same axis as `a`.
fn weight_table<'m>(
    order: usize,
    sim: &SimilarityMatrix,
    outer: impl Fn(usize) -> &'m [u32] + Sync,
    inner: impl Fn(usize) -> &'m [u32] + Sync,
) -> Vec<f64> {
    let mut table = vec![0.0; order * order];
    if order == 0 {
        return table;
    }
    table
        .par_chunks_mut(order)
        .enumerate()
        .for_each_init(
            || vec![0u32; order],
            |counts, (a, row)| {
                counts.iter_mut().for_each(|c| *c = 0);
                for &x in outer(a) {
                    for &b in inner(x as usize) {
                        counts[b as usize] += 1;
                    }
                }
                let s = sim.row(a);
                for b in 0..order {
                    if b != a && counts[b] > 0 {
                        let c = counts[b] as f64;
                        row[b] = s[b] * c * c;
                    }
                }
            },
        );
    table
}

impl<'a> CompletionModel<'a> {
    pub fn new(
        matrix: &'a RatingMatrix,
        user_sim: &SimilarityMatrix,
        item_sim: &SimilarityMatrix,
        config: CompletionConfig,
    ) -> Result<Self> {
        config.validate()?;
        let (n, m) = (matrix.n_users(), matrix.n_items());
        if user_sim.axis() != Axis::User || user_sim.order() != n {
            return Err(Error::Validation(format!(
                "user similarity is {} over {} entities, matrix has {n} users",
                user_sim.axis(),
                user_sim.order()
            )));
        }
        if item_sim.axis() != Axis::Item || item_sim.order() != m {
            return Err(Error::Validation(format!(
                "item similarity is {} over {} entities, matrix has {m} items",
                item_sim.axis(),
                item_sim.order()
            )));
        }
        let user_weights = weight_table(
            n,
            user_sim,
            |u| matrix.row(u).indices,
            |o| matrix.col(o).indices,
        );
        let item_weights = weight_table(
            m,
            item_sim,
            |o| matrix.col(o).indices,
            |u| matrix.row(u).indices,
        );
        let totals = |table: &[f64], order: usize| -> Vec<f64> {
            if order == 0 {
                return Vec::new();
            }
            table.chunks(order).map(|row| row.iter().sum()).collect()
        };
        Ok(CompletionModel {
            user_weight_totals: totals(&user_weights, n),
            item_weight_totals: totals(&item_weights, m),
            user_weights,
            item_weights,
            global_mean: matrix.global_mean(),
            matrix,
            config,
            predicted: AtomicU64::new(0),
        })
    }

    pub fn matrix(&self) -> &RatingMatrix {
        self.matrix
    }

    pub fn config(&self) -> &CompletionConfig {
        &self.config
    }

    /// `S_U[u][v] * co_rated(u, v)^2`, zero on the diagonal.
    pub fn user_weight(&self, u: usize, v: usize) -> f64 {
        self.user_weights[u * self.matrix.n_users() + v]
    }

    /// `S_I[o][p] * co_rated(o, p)^2`, zero on the diagonal.
    pub fn item_weight(&self, o: usize, p: usize) -> f64 {
        self.item_weights[o * self.matrix.n_items() + p]
    }

    /// Number of cells this model has predicted so far.
    pub fn predicted_cells(&self) -> u64 {
        self.predicted.load(Ordering::Relaxed)
    }

    /// Weighted mean of the ratings other users gave item `o`.
    pub fn user_term(&self, u: usize, o: usize) -> Term {
        let n = self.matrix.n_users();
        let weights = &self.user_weights[u * n..(u + 1) * n];
        let (mut num, mut den) = (0.0, 0.0);
        for (v, r) in self.matrix.col(o).iter() {
            if v != u {
                let w = weights[v];
                num += w * r as f64;
                den += w;
            }
        }
        if self.config.literal_denominator {
            den = self.user_weight_totals[u];
        }
        Term {
            value: if den > 0.0 { num / den } else { 0.0 },
            weight_mass: den,
        }
    }

    /// Weighted mean of the ratings user `u` gave to other items.
    pub fn item_term(&self, u: usize, o: usize) -> Term {
        let m = self.matrix.n_items();
        let weights = &self.item_weights[o * m..(o + 1) * m];
        let (mut num, mut den) = (0.0, 0.0);
        for (p, r) in self.matrix.row(u).iter() {
            if p != o {
                let w = weights[p];
                num += w * r as f64;
                den += w;
            }
        }
        if self.config.literal_denominator {
            den = self.item_weight_totals[o];
        }
        Term {
            value: if den > 0.0 { num / den } else { 0.0 },
            weight_mass: den,
        }
    }

    /// Combines precomputed terms for cell `(u, o)` at the given `alpha`.
    pub fn resolve(&self, u: usize, o: usize, user: Term, item: Term, alpha: f64) -> Prediction {
        let scale = self.matrix.scale();
        let (score, source) = match (user.has_weight(), item.has_weight()) {
            (true, true) if alpha == 1.0 => (user.value, PredictionSource::UserTerm),
            (true, true) if alpha == 0.0 => (item.value, PredictionSource::ItemTerm),
            (true, true) => (
                alpha * user.value + (1.0 - alpha) * item.value,
                PredictionSource::Blend,
            ),
            _ => self.fallback(u, o, user, item),
        };
        Prediction {
            score: scale.clamp(score),
            source,
        }
    }

    fn fallback(&self, u: usize, o: usize, user: Term, item: Term) -> (f64, PredictionSource) {
        for &stage in &self.config.fallback {
            let found = match stage {
                FallbackStage::OtherTerm if user.has_weight() => {
                    return (user.value, PredictionSource::UserTerm)
                }
                FallbackStage::OtherTerm if item.has_weight() => {
                    return (item.value, PredictionSource::ItemTerm)
                }
                FallbackStage::OtherTerm => None,
                FallbackStage::UserMean => self.matrix.user_mean(u),
                FallbackStage::ItemMean => self.matrix.item_mean(o),
                FallbackStage::GlobalMean => self.global_mean,
                FallbackStage::Midpoint => Some(self.matrix.scale().midpoint()),
            };
            if let Some(score) = found {
                return (score, PredictionSource::Fallback(stage));
            }
        }
        (
            self.matrix.scale().midpoint(),
            PredictionSource::Fallback(FallbackStage::Midpoint),
        )
    }

    /// Prediction for one cell at the configured alpha. Observed cells are
    /// returned unchanged.
    pub fn predict(&self, u: usize, o: usize) -> Prediction {
        if let Some(r) = self.matrix.row(u).get(o) {
            return Prediction {
                score: r as f64,
                source: PredictionSource::Observed,
            };
        }
        self.predicted.fetch_add(1, Ordering::Relaxed);
        self.resolve(u, o, self.user_term(u, o), self.item_term(u, o), self.config.alpha)
    }

    /// Predictions for every item user `u` has not rated, by ascending item.
    pub fn complete_row(&self, u: usize) -> Vec<(usize, Prediction)> {
        let rated = self.matrix.row(u).indices;
        let mut next = rated.iter().peekable();
        let mut out = Vec::with_capacity(self.matrix.n_items() - rated.len());
        for o in 0..self.matrix.n_items() {
            if next.peek().is_some_and(|&&r| r as usize == o) {
                next.next();
                continue;
            }
            out.push((o, self.predict(u, o)));
        }
        out
    }

    /// The `top_k` unrated items for user `u` by predicted score, ties
    /// broken by ascending item index. Only row `u` is completed.
    pub fn recommend(&self, u: usize, top_k: usize) -> Vec<(usize, Prediction)> {
        let mut row = self.complete_row(u);
        row.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        row.truncate(top_k);
        row
    }

    /// Completes every row; rows are independent and run in parallel.
    pub fn complete_matrix(&self) -> CompletedMatrix {
        let rows = (0..self.matrix.n_users())
            .into_par_iter()
            .map(|u| self.complete_row(u))
            .collect();
        CompletedMatrix {
            base: self.matrix.clone(),
            rows,
        }
    }
}

/// The training matrix plus a prediction for each of its missing cells.
#[derive(Debug, Clone)]
pub struct CompletedMatrix {
    base: RatingMatrix,
    rows: Vec<Vec<(usize, Prediction)>>,
}

impl CompletedMatrix {
    pub fn base(&self) -> &RatingMatrix {
        &self.base
    }

    /// Predicted cells of row `u`, by ascending item.
    pub fn row_predictions(&self, u: usize) -> &[(usize, Prediction)] {
        &self.rows[u]
    }

    pub fn prediction_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Completed value of a cell: the observed rating or the prediction.
    pub fn value(&self, u: usize, o: usize) -> f64 {
        match self.base.row(u).get(o) {
            Some(r) => r as f64,
            None => {
                let row = &self.rows[u];
                let pos = row
                    .binary_search_by_key(&o, |(item, _)| *item)
                    .expect("every missing cell has a prediction");
                row[pos].1.score
            }
        }
    }

    /// Every cell as `user,item,score,source` in row-major order, with raw ids.
    pub fn write_csv<W: Write>(&self, users: &IdMap, items: &IdMap, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "user,item,score,source")?;
        for u in 0..self.base.n_users() {
            let mut observed = self.base.row(u).iter().peekable();
            let mut predicted = self.rows[u].iter().peekable();
            for o in 0..self.base.n_items() {
                let (uid, oid) = (users.id_of(u), items.id_of(o));
                if observed.peek().is_some_and(|(item, _)| *item == o) {
                    let (_, r) = observed.next().unwrap();
                    writeln!(out, "{uid},{oid},{r},observed")?;
                } else {
                    let (_, p) = predicted.next().expect("missing cell without prediction");
                    writeln!(out, "{uid},{oid},{},{}", p.score, p.source)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::{Observation, RatingScale};

    fn matrix(n: usize, m: usize, entries: &[(usize, usize, u8)]) -> RatingMatrix {
        let t: Vec<_> = entries.iter().map(|&(u, o, r)| Observation::new(u, o, r)).collect();
        RatingMatrix::from_triplets(&t, n, m, RatingScale::FIVE_STAR).unwrap()
    }

    fn ones(axis: Axis, order: usize) -> SimilarityMatrix {
        SimilarityMatrix::from_values(axis, order, vec![1.0; order * order]).unwrap()
    }

    /// Target cell (0, 3). Users 1 and 2 rated item 3 (4 and 2) and share
    /// two and one items with user 0.
    fn worked_example() -> RatingMatrix {
        matrix(
            3,
            4,
            &[
                (0, 0, 3),
                (0, 1, 3),
                (1, 0, 5),
                (1, 1, 1),
                (1, 3, 4),
                (2, 0, 2),
                (2, 3, 2),
            ],
        )
    }

    #[test]
    fn user_term_worked_example() {
        let m = worked_example();
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 3), &ones(Axis::Item, 4), CompletionConfig::default())
                .unwrap();
        // c(0,1) = 2, c(0,2) = 1  ->  (4*4 + 2*1) / (4 + 1)
        let t = model.user_term(0, 3);
        assert_eq!(t.weight_mass, 5.0);
        assert!((t.value - 3.6).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_when_nobody_else_rated() {
        let m = worked_example();
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 3), &ones(Axis::Item, 4), CompletionConfig::default())
                .unwrap();
        assert_eq!(model.user_term(0, 2).weight_mass, 0.0);
        let lonely = matrix(2, 2, &[(0, 0, 4)]);
        let model = CompletionModel::new(
            &lonely,
            &ones(Axis::User, 2),
            &ones(Axis::Item, 2),
            CompletionConfig::default(),
        )
        .unwrap();
        assert_eq!(model.item_term(1, 1).weight_mass, 0.0);
    }

    #[test]
    fn single_neighbour_item_term() {
        let m = matrix(2, 2, &[(0, 0, 5), (1, 0, 2), (1, 1, 3)]);
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 2), &ones(Axis::Item, 2), CompletionConfig::default())
                .unwrap();
        let t = model.item_term(0, 1);
        assert!(t.weight_mass > 0.0);
        assert_eq!(t.value, 5.0);
    }

    #[test]
    fn constant_neighbour_ratings_give_that_rating() {
        let m = matrix(4, 3, &[(0, 0, 1), (1, 0, 2), (1, 2, 4), (2, 0, 5), (2, 2, 4), (3, 0, 3), (3, 2, 4)]);
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 4), &ones(Axis::Item, 3), CompletionConfig::default())
                .unwrap();
        assert_eq!(model.user_term(0, 2).value, 4.0);
    }

    #[test]
    fn alpha_endpoints_and_midpoint() {
        let m = worked_example();
        let terms = (
            Term { value: 3.6, weight_mass: 5.0 },
            Term { value: 4.0, weight_mass: 2.0 },
        );
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 3), &ones(Axis::Item, 4), CompletionConfig::default())
                .unwrap();
        let at = |alpha| model.resolve(0, 3, terms.0, terms.1, alpha);
        assert_eq!(at(1.0), Prediction { score: 3.6, source: PredictionSource::UserTerm });
        assert_eq!(at(0.0), Prediction { score: 4.0, source: PredictionSource::ItemTerm });
        let mid = at(0.5);
        assert!((mid.score - 3.8).abs() < 1e-12);
        assert_eq!(mid.source, PredictionSource::Blend);
    }

    #[test]
    fn one_empty_term_uses_the_other() {
        let m = worked_example();
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 3), &ones(Axis::Item, 4), CompletionConfig::default())
                .unwrap();
        let empty = Term { value: 0.0, weight_mass: 0.0 };
        let item = Term { value: 2.5, weight_mass: 1.0 };
        let p = model.resolve(0, 3, empty, item, 0.9);
        assert_eq!(p, Prediction { score: 2.5, source: PredictionSource::ItemTerm });
    }

    #[test]
    fn all_missing_matrix_falls_back_to_midpoint() {
        let m = RatingMatrix::empty(2, 2, RatingScale::FIVE_STAR);
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 2), &ones(Axis::Item, 2), CompletionConfig::default())
                .unwrap();
        let done = model.complete_matrix();
        assert_eq!(done.prediction_count(), 4);
        for u in 0..2 {
            for &(_, p) in done.row_predictions(u) {
                assert_eq!(p.score, 3.0);
                assert_eq!(p.source, PredictionSource::Fallback(FallbackStage::Midpoint));
            }
        }
    }

    #[test]
    fn fallback_walks_means_in_order() {
        // User 0 rated only item 0; nobody shares anything with anyone.
        let m = matrix(3, 3, &[(0, 0, 2), (1, 1, 5)]);
        let model = CompletionModel::new(
            &m,
            &SimilarityMatrix::identity(Axis::User, 3),
            &SimilarityMatrix::identity(Axis::Item, 3),
            CompletionConfig::default(),
        )
        .unwrap();
        assert_eq!(
            model.predict(0, 1),
            Prediction { score: 2.0, source: PredictionSource::Fallback(FallbackStage::UserMean) }
        );
        assert_eq!(
            model.predict(2, 1),
            Prediction { score: 5.0, source: PredictionSource::Fallback(FallbackStage::ItemMean) }
        );
        assert_eq!(
            model.predict(2, 2),
            Prediction { score: 3.5, source: PredictionSource::Fallback(FallbackStage::GlobalMean) }
        );
    }

    #[test]
    fn fully_observed_matrix_needs_no_predictions() {
        let m = matrix(2, 2, &[(0, 0, 1), (0, 1, 2), (1, 0, 3), (1, 1, 4)]);
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 2), &ones(Axis::Item, 2), CompletionConfig::default())
                .unwrap();
        let done = model.complete_matrix();
        assert_eq!(done.prediction_count(), 0);
        assert!(model.complete_row(1).is_empty());
        assert_eq!(done.value(1, 0), 3.0);
    }

    #[test]
    fn literal_denominator_pulls_towards_zero_then_clamps() {
        let m = worked_example();
        let cfg = CompletionConfig {
            alpha: 1.0,
            literal_denominator: true,
            ..CompletionConfig::default()
        };
        let model = CompletionModel::new(&m, &ones(Axis::User, 3), &ones(Axis::Item, 4), cfg).unwrap();
        // Totals for user 0: c(0,1)^2 + c(0,2)^2 = 4 + 1; same raters as above.
        assert_eq!(model.user_term(0, 3).weight_mass, 5.0);
        // Item 2 has no raters: numerator 0, denominator 5.
        let t = model.user_term(0, 2);
        assert_eq!((t.value, t.weight_mass), (0.0, 5.0));
        assert_eq!(model.predict(0, 2).score, 1.0);
    }

    #[test]
    fn rejects_mismatched_similarity() {
        let m = worked_example();
        assert!(CompletionModel::new(&m, &ones(Axis::User, 4), &ones(Axis::Item, 4), CompletionConfig::default())
            .is_err());
        assert!(CompletionModel::new(&m, &ones(Axis::Item, 3), &ones(Axis::Item, 4), CompletionConfig::default())
            .is_err());
        assert!(CompletionConfig::new(1.5).is_err());
    }

    #[test]
    fn export_lists_every_cell() {
        let m = matrix(2, 2, &[(0, 0, 4)]);
        let model =
            CompletionModel::new(&m, &ones(Axis::User, 2), &ones(Axis::Item, 2), CompletionConfig::default())
                .unwrap();
        let mut out = Vec::new();
        model
            .complete_matrix()
            .write_csv(&IdMap::identity(2), &IdMap::from_ids(["a", "b"]), &mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "user,item,score,source");
        assert_eq!(lines[1], "0,a,4,observed");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "0,b,4,fallback:user_mean");
    }
}
