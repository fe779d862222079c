//! Classification metrics, cross-validation and the relevance ablation.

mod ablation;
mod cv;
mod metrics;

pub use ablation::{ablate_log, ablation_experiment, ablation_from, AblationReport, AblationResult, Removal};
pub use cv::{cross_validate, evaluate_fold, CvOutcome, CvReport, FoldResult, Summary};
pub use metrics::{auc_roc, compute_metrics, confusion, mean_and_std, Confusion, Metrics, THRESHOLD};
