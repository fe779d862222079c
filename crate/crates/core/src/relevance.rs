//! Activity relevance from the readout's attention gate.
//!
//! For one instance the raw gate values of its activity nodes are min-max
//! normalised over the activities present in the instance; every other
//! vocabulary activity scores exactly 0. The `Start/End` node takes no part.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::event_log::{Label, Trace};
use crate::instance_graph::EncodedGraph;
use crate::training::TrainedModel;

/// Score given to every present activity when their raw scores coincide.
pub const DEGENERATE_RELEVANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceVector {
    pub case_id: String,
    pub predicted_label: Label,
    pub raw_score: f64,
    /// One entry per vocabulary activity.
    pub scores: BTreeMap<String, f64>,
    pub present: BTreeSet<String>,
}

/// Min-max normalisation; equal values all map to [`DEGENERATE_RELEVANCE`].
pub fn min_max_normalize(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        raw.iter().map(|x| (x - lo) / (hi - lo)).collect()
    } else {
        vec![DEGENERATE_RELEVANCE; raw.len()]
    }
}

/// Builds a relevance vector from per-activity raw gate values.
pub fn relevance_from_raw(
    case_id: &str,
    raw_score: f64,
    vocabulary: &[String],
    raw: &[(String, f64)],
) -> RelevanceVector {
    let values: Vec<f64> = raw.iter().map(|(_, v)| *v).collect();
    let normalized = min_max_normalize(&values);
    let mut scores: BTreeMap<String, f64> = vocabulary.iter().map(|a| (a.clone(), 0.0)).collect();
    let mut present = BTreeSet::new();
    for ((activity, _), value) in raw.iter().zip(normalized) {
        scores.insert(activity.clone(), value);
        present.insert(activity.clone());
    }
    RelevanceVector {
        case_id: case_id.to_string(),
        predicted_label: Label::from_bool(raw_score >= 0.5),
        raw_score,
        scores,
        present,
    }
}

pub fn instance_relevance(
    model: &TrainedModel,
    g: &EncodedGraph,
    case_id: &str,
) -> Result<RelevanceVector> {
    if g.hidden_dim() != model.params.hidden_dim
        || g.node_vocab.iter().any(|&v| v >= model.vocab.size())
    {
        return Err(Error::Encoding(format!(
            "case {case_id} was not encoded with the model's vocabulary"
        )));
    }
    let out = model.predict(g)?;
    let raw: Vec<(String, f64)> = g
        .node_vocab
        .iter()
        .zip(&out.node_relevance)
        .filter_map(|(&v, &r)| model.vocab.activity_at(v).map(|a| (a.to_string(), r)))
        .collect();
    Ok(relevance_from_raw(
        case_id,
        out.prediction,
        model.vocab.activities(),
        &raw,
    ))
}

/// Encodes `trace` with the model's vocabulary and scores it.
pub fn trace_relevance(model: &TrainedModel, trace: &Trace) -> Result<RelevanceVector> {
    let g = model.encode(trace)?;
    instance_relevance(model, &g, trace.case_id())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeMode {
    Most,
    Least,
}

impl ExtremeMode {
    pub fn name(self) -> &'static str {
        match self {
            ExtremeMode::Most => "most",
            ExtremeMode::Least => "least",
        }
    }
}

impl FromStr for ExtremeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "most" => Ok(ExtremeMode::Most),
            "least" => Ok(ExtremeMode::Least),
            other => Err(Error::Config(format!("mode must be most or least, got {other:?}"))),
        }
    }
}

/// Most or least relevant present activity; ties go to the
/// lexicographically smallest name.
pub fn select_extreme_activity(v: &RelevanceVector, mode: ExtremeMode) -> Option<&str> {
    let mut best: Option<(&str, f64)> = None;
    // `present` iterates in lexicographic order, so strict comparison keeps
    // the smallest name on ties
    for a in &v.present {
        let score = v.scores[a];
        let better = match (best, mode) {
            (None, _) => true,
            (Some((_, b)), ExtremeMode::Most) => score > b,
            (Some((_, b)), ExtremeMode::Least) => score < b,
        };
        if better {
            best = Some((a, score));
        }
    }
    best.map(|(a, _)| a)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupRelevance {
    pub instances: usize,
    pub mean: BTreeMap<String, f64>,
    /// Instances of the group in which the activity occurs.
    pub support: BTreeMap<String, usize>,
}

impl GroupRelevance {
    /// Activity with the highest mean, ties to the smallest name.
    pub fn top_activity(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (a, &m) in &self.mean {
            if best.map_or(true, |(_, b)| m > b) {
                best = Some((a, m));
            }
        }
        best.map(|(a, _)| a)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregatedRelevance {
    pub groups: BTreeMap<Label, GroupRelevance>,
}

impl AggregatedRelevance {
    pub fn group(&self, label: Label) -> Option<&GroupRelevance> {
        self.groups.get(&label)
    }

    /// `label,activity,mean_relevance,support_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,activity,mean_relevance,support_count\n");
        for (label, g) in &self.groups {
            for (a, m) in &g.mean {
                writeln!(
                    out,
                    "{},{},{:.6},{}",
                    label.as_u8(),
                    csv_field(a),
                    m,
                    g.support.get(a).copied().unwrap_or(0)
                )
                .unwrap();
            }
        }
        out
    }
}

/// Per-label arithmetic means; absent activities contribute their zeros.
pub fn aggregate_relevance(vectors: &[RelevanceVector]) -> AggregatedRelevance {
    let mut groups: BTreeMap<Label, GroupRelevance> = BTreeMap::new();
    for v in vectors {
        let g = groups.entry(v.predicted_label).or_default();
        g.instances += 1;
        for (a, s) in &v.scores {
            *g.mean.entry(a.clone()).or_insert(0.0) += s;
            let support = g.support.entry(a.clone()).or_insert(0);
            if v.present.contains(a) {
                *support += 1;
            }
        }
    }
    for g in groups.values_mut() {
        let n = g.instances as f64;
        g.mean.values_mut().for_each(|m| *m /= n);
    }
    AggregatedRelevance { groups }
}

/// `case_id,predicted_label,raw_score,<activity...>` with six decimals.
pub fn relevance_csv(vectors: &[RelevanceVector], vocabulary: &[String]) -> String {
    let mut out = String::from("case_id,predicted_label,raw_score");
    for a in vocabulary {
        out.push(',');
        out.push_str(&csv_field(a));
    }
    out.push('\n');
    for v in vectors {
        write!(
            out,
            "{},{},{:.6}",
            csv_field(&v.case_id),
            v.predicted_label.as_u8(),
            v.raw_score
        )
        .unwrap();
        for a in vocabulary {
            write!(out, ",{:.6}", v.scores.get(a).copied().unwrap_or(0.0)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
