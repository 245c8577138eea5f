//! Metrics, curves and the evaluation protocols, with performance and comparison
//! renderers.

pub mod metrics;
pub mod protocol;
pub mod report;

pub use metrics::{
    classification_metrics, confusion, kfold_split, pr_points, rank_auc, roc_auc, ClassMetrics, Confusion, Metrics,
    PrPoint, RocPoint,
};
pub use protocol::{
    baseline_variants, cross_validate, default_grid, evaluate_holdout, evaluate_random_forest_runs, evaluate_runs,
    fit_and_score, run_baseline_comparison, run_grid, train_test_split, BaselineComparison, ComparisonConfig,
    ComparisonRow, EvalReport, GridEntry, Protocol, Significance, Summary, UnitResult, TRAIN_FRACTION,
};
pub use report::{PerformanceTable, PerformanceRow, PERFORMANCE_COLUMNS, COMPARISON_COLUMNS};
