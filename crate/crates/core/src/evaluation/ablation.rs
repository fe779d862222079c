use std::fmt::Write as _;

use super::cv::{cross_validate, CvOutcome, CvReport};
use crate::error::{Error, Result};
use crate::event_log::{EventLog, FoldSplit, Label};
use crate::relevance::{select_extreme_activity, trace_relevance, ExtremeMode};
use crate::training::{TrainConfig, TrainedModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub case_id: String,
    pub activity: String,
    pub predicted_label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationReport {
    pub mode: ExtremeMode,
    pub removals: Vec<Removal>,
    /// Traces that lost every event.
    pub dropped: Vec<String>,
    /// Traces left untouched because their fold's model could not encode them.
    pub unscored: Vec<String>,
}

/// Removes from every trace all events of its most or least relevant
/// activity, judged by the model of the fold that held the trace out.
pub fn ablate_log(
    log: &EventLog,
    models: &[TrainedModel],
    folds: &[FoldSplit],
    mode: ExtremeMode,
) -> Result<(EventLog, AblationReport)> {
    if models.len() != folds.len() {
        return Err(Error::Config(format!(
            "{} models for {} folds",
            models.len(),
            folds.len()
        )));
    }
    let mut fold_of = vec![None; log.len()];
    for (f, split) in folds.iter().enumerate() {
        for &i in &split.test {
            if i >= log.len() || fold_of[i].replace(f).is_some() {
                return Err(Error::Consistency(format!(
                    "trace index {i} is not a unique test member"
                )));
            }
        }
    }

    let mut report = AblationReport {
        mode,
        removals: Vec::new(),
        dropped: Vec::new(),
        unscored: Vec::new(),
    };
    let mut kept = Vec::with_capacity(log.len());
    for (i, trace) in log.traces().iter().enumerate() {
        let f = fold_of[i].ok_or_else(|| {
            Error::Consistency(format!("trace {} is in no test fold", trace.case_id()))
        })?;
        let v = match trace_relevance(&models[f], trace) {
            Ok(v) => v,
            Err(Error::Encoding(_)) => {
                report.unscored.push(trace.case_id().to_string());
                kept.push(trace.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let activity = select_extreme_activity(&v, mode)
            .expect("a non-empty trace has a present activity")
            .to_string();
        match trace.without_activity(&activity) {
            Some(t) => kept.push(t),
            None => report.dropped.push(trace.case_id().to_string()),
        }
        report.removals.push(Removal {
            case_id: v.case_id,
            activity,
            predicted_label: v.predicted_label,
        });
    }
    Ok((EventLog::new(kept)?, report))
}

#[derive(Debug, Clone)]
pub struct AblationResult {
    pub original: CvOutcome,
    pub without_least: CvReport,
    pub without_most: CvReport,
    pub least_log: EventLog,
    pub most_log: EventLog,
    pub least: AblationReport,
    pub most: AblationReport,
}

impl AblationResult {
    /// Three rows, `mean (std)` per metric.
    pub fn to_table(&self) -> String {
        let mut out = String::from("event_log,auc_roc,sensitivity,specificity\n");
        for (name, r) in [
            ("original", &self.original.report),
            ("w/o least relevant", &self.without_least),
            ("w/o most relevant", &self.without_most),
        ] {
            writeln!(
                out,
                "{name},{},{},{}",
                r.auc(),
                r.sensitivity(),
                r.specificity()
            )
            .unwrap();
        }
        out
    }
}

/// Cross-validates `log`, derives the two ablated logs from the fold
/// models, and cross-validates each of them with fresh training.
pub fn ablation_experiment(
    log: &EventLog,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<AblationResult> {
    let original = cross_validate(log, cfg, k, seed, jobs)?;
    ablation_from(original, log, cfg, k, seed, jobs)
}

/// As [`ablation_experiment`], reusing a finished run on the original log.
pub fn ablation_from(
    original: CvOutcome,
    log: &EventLog,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<AblationResult> {
    let (least_log, least) = ablate_log(log, &original.models, &original.splits, ExtremeMode::Least)?;
    let (most_log, most) = ablate_log(log, &original.models, &original.splits, ExtremeMode::Most)?;
    let without_least = cross_validate(&least_log, cfg, k, seed, jobs)?.report;
    let without_most = cross_validate(&most_log, cfg, k, seed, jobs)?.report;
    Ok(AblationResult {
        original,
        without_least,
        without_most,
        least_log,
        most_log,
        least,
        most,
    })
}
