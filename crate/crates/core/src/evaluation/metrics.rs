use crate::error::{Error, Result};
use crate::event_log::Label;

/// Decision threshold: scores at or above it predict the positive outcome.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Threshold metrics plus the ranking AUC.
///
/// Any of the three rates is `None` when its denominator is empty, which
/// for the AUC means the labels contain a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub auc_roc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub confusion: Confusion,
}

/// Exact AUC as the Mann-Whitney statistic: concordant positive/negative
/// pairs plus half the tied ones, over `P * N`.
pub fn auc_roc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let (mut negatives_below, mut positives, mut negatives) = (0u128, 0u128, 0u128);
    // twice the statistic's numerator, kept integral
    let mut twice_wins = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            match labels[order[j]] {
                Label::Positive => pos += 1,
                Label::Negative => neg += 1,
            }
            j += 1;
        }
        twice_wins += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        positives += pos;
        negatives += neg;
        i = j;
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::Consistency(
            "AUC is undefined when only one class is present".into(),
        ));
    }
    Ok(twice_wins as f64 / (2 * positives * negatives) as f64)
}

pub fn confusion(scores: &[f64], labels: &[Label]) -> Result<Confusion> {
    check_inputs(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= THRESHOLD, l) {
            (true, Label::Positive) => c.tp += 1,
            (true, Label::Negative) => c.fp += 1,
            (false, Label::Negative) => c.tn += 1,
            (false, Label::Positive) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn compute_metrics(scores: &[f64], labels: &[Label]) -> Result<Metrics> {
    let confusion = confusion(scores, labels)?;
    let rate = |hit: usize, miss: usize| (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64);
    Ok(Metrics {
        auc_roc: auc_roc(scores, labels).ok(),
        sensitivity: rate(confusion.tp, confusion.fn_),
        specificity: rate(confusion.tn, confusion.fp),
        confusion,
    })
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores to evaluate".into()));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::numeric("scores", format!("non-finite score {s}")));
    }
    Ok(())
}

/// Arithmetic mean and sample standard deviation; the deviation needs two
/// values.
pub fn mean_and_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (Some(mean), std)
}
