use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::completion::{CompletionConfig, CompletionModel, FallbackStage, Term};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{baseline_predict, rmse_by, BaselineKind};
use crate::ratings::{mask_fold, split_folds, FoldAssignment, Observation, RatingMatrix};
use crate::similarity::{build_similarity_cached, Axis, Compressor, CompressorProfile, Measure, SimilarityCache};

/// Everything needed to run one cross-validation besides the data.
#[derive(Debug, Clone)]
pub struct EvaluationOptions {
    pub measure: Measure,
    pub profile: CompressorProfile,
    /// `alpha` is used by [`cross_validate`]; sweeps override it.
    pub completion: CompletionConfig,
    pub cache: Option<SimilarityCache>,
}

impl EvaluationOptions {
    pub fn new(measure: Measure) -> Self {
        EvaluationOptions {
            measure,
            profile: CompressorProfile::default(),
            completion: CompletionConfig::default(),
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub rmse: f64,
    pub sim_build_ms: f64,
    pub complete_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub k: usize,
    /// `"random"` or the name of the predefined split.
    pub fold_source: String,
    pub seed: Option<u64>,
    pub compressor: CompressorProfile,
    pub literal_denominator: bool,
    pub fallback: Vec<FallbackStage>,
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub measure: Measure,
    pub alpha: f64,
    pub folds: Vec<FoldReport>,
    pub mean_rmse: f64,
    /// Mean RMSE of the mean-based baselines over the same folds.
    pub baselines: BTreeMap<BaselineKind, f64>,
    pub config: ReportConfig,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Where fold assignments come from, echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldSource {
    Random { seed: u64 },
    Predefined { name: String },
}

impl FoldSource {
    fn describe(&self) -> (String, Option<u64>) {
        match self {
            FoldSource::Random { seed } => ("random".to_string(), Some(*seed)),
            FoldSource::Predefined { name } => (name.clone(), None),
        }
    }
}

/// `0, 0.1, ..., 1`.
pub fn alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// The report with the lowest mean RMSE (smallest alpha on ties).
pub fn best_alpha(reports: &[EvaluationReport]) -> Option<&EvaluationReport> {
    reports.iter().fold(None, |best: Option<&EvaluationReport>, r| match best {
        Some(b) if b.mean_rmse <= r.mean_rmse => Some(b),
        _ => Some(r),
    })
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs k-fold cross-validation once per `alpha`, sharing the similarity
/// builds and per-cell terms between alphas (alpha only enters the final
/// blend). For every fold the similarities are rebuilt from that fold's
/// training split alone.
pub fn cross_validate_sweep(
    dataset: &str,
    matrix: &RatingMatrix,
    folds: &FoldAssignment,
    source: &FoldSource,
    alphas: &[f64],
    options: &EvaluationOptions,
) -> Result<Vec<EvaluationReport>> {
    if folds.k() < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {}", folds.k())));
    }
    if alphas.is_empty() {
        return Err(Error::Config("no alpha values to evaluate".into()));
    }
    for &alpha in alphas {
        CompletionConfig {
            alpha,
            ..options.completion.clone()
        }
        .validate()?;
    }

    let compressor = Compressor::new(options.profile);
    let mut per_alpha: Vec<Vec<FoldReport>> = vec![Vec::new(); alphas.len()];
    let mut baseline_sums: BTreeMap<BaselineKind, f64> = BTreeMap::new();

    for fold in 1..=folds.k() {
        let (train, test) = mask_fold(matrix, folds, fold)?;
        if test.is_empty() {
            return Err(Error::Validation(format!("fold {fold} has no test entries")));
        }

        let start = Instant::now();
        let cache = options.cache.as_ref();
        let user_sim = build_similarity_cached(&train, Axis::User, options.measure, &compressor, cache)?;
        let item_sim = build_similarity_cached(&train, Axis::Item, options.measure, &compressor, cache)?;
        let sim_build_ms = millis(start);

        let start = Instant::now();
        let model = CompletionModel::new(&train, &user_sim, &item_sim, options.completion.clone())?;
        drop((user_sim, item_sim));
        let terms: Vec<(Term, Term)> = test
            .par_iter()
            .map(|t| (model.user_term(t.user, t.item), model.item_term(t.user, t.item)))
            .collect();
        let terms_ms = millis(start);

        for (slot, &alpha) in alphas.iter().enumerate() {
            let start = Instant::now();
            let mut cell = terms.iter();
            let rmse = rmse_by(&test, |t: &Observation| {
                let (user, item) = cell.next()?;
                Some(model.resolve(t.user, t.item, *user, *item, alpha).score)
            })?;
            per_alpha[slot].push(FoldReport {
                fold,
                rmse,
                sim_build_ms,
                complete_ms: terms_ms + millis(start),
            });
        }

        for kind in BaselineKind::ALL {
            let r = rmse_by(&test, |t| Some(baseline_predict(&train, kind, t.user, t.item)))?;
            *baseline_sums.entry(kind).or_default() += r;
        }
    }

    let k = folds.k() as f64;
    let baselines: BTreeMap<_, _> = baseline_sums.into_iter().map(|(kind, s)| (kind, s / k)).collect();
    let (fold_source, seed) = source.describe();
    let config = ReportConfig {
        k: folds.k(),
        fold_source,
        seed,
        compressor: options.profile,
        literal_denominator: options.completion.literal_denominator,
        fallback: options.completion.fallback.clone(),
        n_users: matrix.n_users(),
        n_items: matrix.n_items(),
        n_ratings: matrix.nnz(),
    };
    Ok(alphas
        .iter()
        .zip(per_alpha)
        .map(|(&alpha, folds)| EvaluationReport {
            dataset: dataset.to_string(),
            measure: options.measure,
            alpha,
            mean_rmse: folds.iter().map(|f| f.rmse).sum::<f64>() / k,
            folds,
            baselines: baselines.clone(),
            config: config.clone(),
        })
        .collect())
}

/// Seeded uniform k-fold cross-validation at `options.completion.alpha`.
pub fn cross_validate(
    dataset: &str,
    matrix: &RatingMatrix,
    k: usize,
    seed: u64,
    options: &EvaluationOptions,
) -> Result<EvaluationReport> {
    let folds = split_folds(matrix, k, seed)?;
    let mut reports = cross_validate_sweep(
        dataset,
        matrix,
        &folds,
        &FoldSource::Random { seed },
        &[options.completion.alpha],
        options,
    )?;
    Ok(reports.remove(0))
}

/// One line per (method, dataset) pair.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let mut rows: Vec<(String, String, f64, String)> = Vec::new();
    for r in reports {
        let folds: Vec<String> = r.folds.iter().map(|f| format!("{:.4}", f.rmse)).collect();
        rows.push((
            format!("KolMaC {} (alpha={:.2})", r.measure, r.alpha),
            r.dataset.clone(),
            r.mean_rmse,
            folds.join(" "),
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for r in reports {
        if seen.insert(r.dataset.clone()) {
            for (kind, v) in &r.baselines {
                rows.push((format!("baseline {kind}"), r.dataset.clone(), *v, String::new()));
            }
        }
    }
    let w_method = rows.iter().map(|r| r.0.len()).max().unwrap_or(6).max(6);
    let w_data = rows.iter().map(|r| r.1.len()).max().unwrap_or(7).max(7);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w_method$}  {:<w_data$}  {:>9}  folds", "method", "dataset", "RMSE");
    for (method, data, rmse, folds) in rows {
        let _ = writeln!(out, "{method:<w_method$}  {data:<w_data$}  {rmse:>9.4}  {folds}");
    }
    out
}
