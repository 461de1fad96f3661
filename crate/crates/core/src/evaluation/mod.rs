//! RMSE, mean baselines and the k-fold cross-validation driver.

mod cv;
mod metrics;

pub use cv::{
    alpha_grid, best_alpha, cross_validate, cross_validate_sweep, render_table, EvaluationOptions,
    EvaluationReport, FoldReport, FoldSource, ReportConfig,
};
pub use metrics::{baseline_predict, rmse, rmse_by, BaselineKind};
