use std::fmt::{self, Write as _};

use rayon::prelude::*;

use super::metrics::{compute_metrics, mean_and_std, Metrics};
use crate::error::{Error, Result};
use crate::event_log::{split_folds, EventLog, FoldSplit, Label};
use crate::instance_graph::{encode_log, ActivityVocabulary};
use crate::relevance::{aggregate_relevance, trace_relevance, AggregatedRelevance, RelevanceVector};
use crate::training::{train, TrainConfig, TrainedModel};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// 1-based.
    pub fold: usize,
    pub metrics: Metrics,
    pub test_size: usize,
    /// Test cases with activities the fold's model never saw.
    pub skipped: Vec<String>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

impl FoldResult {
    /// A single-class test set leaves the AUC undefined.
    pub fn single_class(&self) -> bool {
        self.metrics.auc_roc.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
}

/// Mean and sample standard deviation over the folds where a metric is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl fmt::Display for Summary {
    /// `mean (std)` with three decimals; empty when undefined.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mean, self.std) {
            (Some(m), Some(sd)) => write!(f, "{m:.3} ({sd:.3})"),
            (Some(m), None) => write!(f, "{m:.3}"),
            _ => Ok(()),
        }
    }
}

impl CvReport {
    fn summarize(&self, pick: impl Fn(&Metrics) -> Option<f64>) -> Summary {
        let values: Vec<f64> = self.folds.iter().filter_map(|f| pick(&f.metrics)).collect();
        let (mean, std) = mean_and_std(&values);
        Summary { mean, std }
    }

    pub fn auc(&self) -> Summary {
        self.summarize(|m| m.auc_roc)
    }

    pub fn sensitivity(&self) -> Summary {
        self.summarize(|m| m.sensitivity)
    }

    pub fn specificity(&self) -> Summary {
        self.summarize(|m| m.specificity)
    }

    pub fn skipped(&self) -> usize {
        self.folds.iter().map(|f| f.skipped.len()).sum()
    }

    /// `fold,auc,sensitivity,specificity`, one row per fold followed by
    /// `mean` and `std` rows. Undefined values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,auc,sensitivity,specificity\n");
        for f in &self.folds {
            let m = &f.metrics;
            writeln!(
                out,
                "{},{},{},{}",
                f.fold,
                cell(m.auc_roc),
                cell(m.sensitivity),
                cell(m.specificity)
            )
            .unwrap();
        }
        let (a, s, p) = (self.auc(), self.sensitivity(), self.specificity());
        writeln!(out, "mean,{},{},{}", cell(a.mean), cell(s.mean), cell(p.mean)).unwrap();
        writeln!(out, "std,{},{},{}", cell(a.std), cell(s.std), cell(p.std)).unwrap();
        out
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Everything a cross-validation run produces, fold-aligned.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    pub splits: Vec<FoldSplit>,
    pub models: Vec<TrainedModel>,
    /// Relevance of every scored test instance, per fold.
    pub relevance: Vec<Vec<RelevanceVector>>,
}

impl CvOutcome {
    pub fn fold_relevance(&self, fold: usize) -> AggregatedRelevance {
        aggregate_relevance(&self.relevance[fold])
    }
}

/// `k`-fold cross-validation.
///
/// Fold `f` (0-based) trains with seed `seed + f` on a vocabulary built from
/// its training and validation traces. Up to `jobs` folds run at once; the
/// result does not depend on `jobs`.
pub fn cross_validate(
    log: &EventLog,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<CvOutcome> {
    cfg.validate()?;
    if jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    let has = |l: Label| log.traces().iter().any(|t| t.label() == l);
    if !has(Label::Positive) || !has(Label::Negative) {
        return Err(Error::Consistency(
            "cross-validation needs both outcome classes".into(),
        ));
    }
    let splits = split_folds(log, k, seed, cfg.validation_fraction)?;
    let run = |f: usize| evaluate_fold(log, &splits[f], f, cfg, seed);
    let results: Vec<Result<_>> = if jobs == 1 {
        (0..k).map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(|| (0..k).into_par_iter().map(run).collect())
    };

    let mut folds = Vec::with_capacity(k);
    let mut models = Vec::with_capacity(k);
    let mut relevance = Vec::with_capacity(k);
    for r in results {
        let (fold, model, vectors) = r?;
        folds.push(fold);
        models.push(model);
        relevance.push(vectors);
    }
    Ok(CvOutcome {
        report: CvReport { folds },
        splits,
        models,
        relevance,
    })
}

/// Trains and scores fold `f` (0-based) of `splits` the way
/// [`cross_validate`] does.
pub fn evaluate_fold(
    log: &EventLog,
    split: &FoldSplit,
    f: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(FoldResult, TrainedModel, Vec<RelevanceVector>)> {
    let train_log = log.select(&split.train)?;
    let validation_log = log.select(&split.validation)?;
    let vocab = ActivityVocabulary::from_activities(
        train_log
            .activity_universe()
            .iter()
            .chain(validation_log.activity_universe())
            .cloned(),
    );
    let dim = vocab.size() + cfg.model.padding;
    let train_set = encode_log(&train_log, &vocab, dim)?;
    let validation_set = encode_log(&validation_log, &vocab, dim)?;
    let fold_cfg = TrainConfig {
        seed: seed.wrapping_add(f as u64),
        ..cfg.clone()
    };
    let model = train(&train_set, &validation_set, &vocab, &fold_cfg)?;

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for &i in &split.test {
        let trace = &log.traces()[i];
        match trace_relevance(&model, trace) {
            Ok(v) => {
                scores.push(v.raw_score);
                labels.push(trace.label());
                vectors.push(v);
            }
            Err(Error::Encoding(_)) => skipped.push(trace.case_id().to_string()),
            Err(e) => return Err(e),
        }
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput(format!(
            "fold {}: no test case could be encoded",
            f + 1
        )));
    }
    let fold = FoldResult {
        fold: f + 1,
        metrics: compute_metrics(&scores, &labels)?,
        test_size: split.test.len(),
        skipped,
        stopped_epoch: model.report.stopped_epoch,
        best_epoch: model.report.best_epoch,
    };
    Ok((fold, model, vectors))
}
