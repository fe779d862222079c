//! Directly-follows graphs and their DOT rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::event_log::{EventLog, Label};
use crate::relevance::{csv_field, AggregatedRelevance, DEGENERATE_RELEVANCE};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dfg {
    pub activity_counts: BTreeMap<String, usize>,
    pub edge_counts: BTreeMap<(String, String), usize>,
    pub start_counts: BTreeMap<String, usize>,
    pub end_counts: BTreeMap<String, usize>,
}

impl Dfg {
    /// Adds the counts of `other`; mining two halves of a log and merging
    /// equals mining the whole log.
    pub fn merge(&mut self, other: &Dfg) {
        fn add<K: Ord + Clone>(into: &mut BTreeMap<K, usize>, from: &BTreeMap<K, usize>) {
            for (k, v) in from {
                *into.entry(k.clone()).or_insert(0) += v;
            }
        }
        add(&mut self.activity_counts, &other.activity_counts);
        add(&mut self.edge_counts, &other.edge_counts);
        add(&mut self.start_counts, &other.start_counts);
        add(&mut self.end_counts, &other.end_counts);
    }

    pub fn total_edge_count(&self) -> usize {
        self.edge_counts.values().sum()
    }

    /// `kind,source,target,count` rows for nodes, edges, starts and ends.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,source,target,count\n");
        for (a, c) in &self.activity_counts {
            writeln!(out, "node,{},,{c}", csv_field(a)).unwrap();
        }
        for ((a, b), c) in &self.edge_counts {
            writeln!(out, "edge,{},{},{c}", csv_field(a), csv_field(b)).unwrap();
        }
        for (a, c) in &self.start_counts {
            writeln!(out, "start,,{},{c}", csv_field(a)).unwrap();
        }
        for (a, c) in &self.end_counts {
            writeln!(out, "end,{},,{c}", csv_field(a)).unwrap();
        }
        out
    }
}

pub fn mine_dfg(log: &EventLog) -> Result<Dfg> {
    if log.is_empty() {
        return Err(Error::EmptyInput("cannot mine an empty log".into()));
    }
    let mut d = Dfg::default();
    for trace in log.traces() {
        let acts: Vec<&str> = trace.activities().collect();
        for a in &acts {
            *d.activity_counts.entry(a.to_string()).or_insert(0) += 1;
        }
        for pair in acts.windows(2) {
            *d.edge_counts
                .entry((pair[0].to_string(), pair[1].to_string()))
                .or_insert(0) += 1;
        }
        if let (Some(first), Some(last)) = (acts.first(), acts.last()) {
            *d.start_counts.entry(first.to_string()).or_insert(0) += 1;
            *d.end_counts.entry(last.to_string()).or_insert(0) += 1;
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    Frequency,
    Relevance,
}

impl FromStr for AnnotationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(AnnotationKind::Frequency),
            "relevance" => Ok(AnnotationKind::Relevance),
            other => Err(Error::Config(format!(
                "annotation must be frequency or relevance, got {other:?}"
            ))),
        }
    }
}

/// Per-activity display values.
///
/// A frequency map may be empty, in which case the graph's own activity
/// counts are shown.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMap {
    kind: AnnotationKind,
    values: BTreeMap<String, f64>,
    group: Option<Label>,
}

impl AnnotationMap {
    pub fn frequency() -> Self {
        Self {
            kind: AnnotationKind::Frequency,
            values: BTreeMap::new(),
            group: None,
        }
    }

    pub fn relevance(values: BTreeMap<String, f64>, group: Label) -> Result<Self> {
        if let Some((a, v)) = values.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!(
                "relevance of {a} is {v}, outside [0, 1]"
            )));
        }
        Ok(Self {
            kind: AnnotationKind::Relevance,
            values,
            group: Some(group),
        })
    }

    /// Mean relevance of one predicted-label group, if that group exists.
    pub fn from_aggregate(agg: &AggregatedRelevance, group: Label) -> Option<Result<Self>> {
        agg.group(group)
            .map(|g| Self::relevance(g.mean.clone(), group))
    }

    pub fn kind(&self) -> AnnotationKind {
        self.kind
    }

    pub fn group(&self) -> Option<Label> {
        self.group
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAnnotation {
    pub value: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDfg {
    pub dfg: Dfg,
    pub kind: AnnotationKind,
    pub group: Option<Label>,
    pub nodes: BTreeMap<String, NodeAnnotation>,
}

/// Attaches a display value and a colour intensity in `[0, 1]` to every
/// activity of `d`.
///
/// Frequencies are min-max normalised (equal counts give 0.5); relevance
/// passes through, with activities missing from the map at 0.
pub fn annotate_dfg(d: &Dfg, ann: &AnnotationMap) -> AnnotatedDfg {
    let nodes = match ann.kind {
        AnnotationKind::Frequency => {
            let values: BTreeMap<&String, f64> = d
                .activity_counts
                .iter()
                .map(|(a, &c)| (a, ann.values.get(a).copied().unwrap_or(c as f64)))
                .collect();
            let lo = values.values().copied().fold(f64::INFINITY, f64::min);
            let hi = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
            values
                .into_iter()
                .map(|(a, value)| {
                    let intensity = if hi > lo {
                        (value - lo) / (hi - lo)
                    } else {
                        DEGENERATE_RELEVANCE
                    };
                    (a.clone(), NodeAnnotation { value, intensity })
                })
                .collect()
        }
        AnnotationKind::Relevance => d
            .activity_counts
            .keys()
            .map(|a| {
                let value = ann.values.get(a).copied().unwrap_or(0.0);
                (a.clone(), NodeAnnotation { value, intensity: value })
            })
            .collect(),
    };
    AnnotatedDfg {
        dfg: d.clone(),
        kind: ann.kind,
        group: ann.group,
        nodes,
    }
}

#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Hide directly-follows edges seen fewer times than this.
    pub min_edge_count: usize,
    pub title: Option<String>,
}

/// HSV fill colour: light blue at intensity 0, saturated blue at 1.
pub fn fill_color(intensity: f64) -> String {
    format!("0.60 {:.2} 1.0", 0.15 + 0.85 * intensity.clamp(0.0, 1.0))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `g` as a DOT digraph, activities and edges in sorted order.
pub fn to_dot(g: &AnnotatedDfg, options: &DotOptions) -> String {
    let mut start_id = String::from("__start__");
    while g.nodes.contains_key(&start_id) {
        start_id.push('_');
    }
    let mut end_id = String::from("__end__");
    while g.nodes.contains_key(&end_id) {
        end_id.push('_');
    }

    let mut out = String::from("digraph dfg {\n");
    if let Some(title) = &options.title {
        writeln!(out, "  label={};\n  labelloc=t;", quote(title)).unwrap();
    }
    out.push_str("  rankdir=LR;\n  node [shape=box, fontname=\"Helvetica\"];\n");
    writeln!(out, "  {} [shape=point, label=\"\"];", quote(&start_id)).unwrap();
    writeln!(out, "  {} [shape=point, label=\"\"];", quote(&end_id)).unwrap();
    for (a, n) in &g.nodes {
        let value = match g.kind {
            AnnotationKind::Frequency => format!("{:.0}", n.value),
            AnnotationKind::Relevance => format!("{:.2}", n.value),
        };
        let label = format!("{}\\n({value})", a.replace('\\', "\\\\").replace('"', "\\\""));
        writeln!(
            out,
            "  {} [label=\"{label}\", style=filled, fillcolor=\"{}\"];",
            quote(a),
            fill_color(n.intensity)
        )
        .unwrap();
    }

    let max_edge = g.dfg.edge_counts.values().copied().max().unwrap_or(0);
    for (a, c) in &g.dfg.start_counts {
        writeln!(out, "  {} -> {} [label=\"{c}\", style=dashed];", quote(&start_id), quote(a)).unwrap();
    }
    for ((a, b), &c) in &g.dfg.edge_counts {
        if c < options.min_edge_count {
            continue;
        }
        let width = 1.0 + 4.0 * c as f64 / max_edge as f64;
        writeln!(out, "  {} -> {} [label=\"{c}\", penwidth={width:.2}];", quote(a), quote(b)).unwrap();
    }
    for (a, c) in &g.dfg.end_counts {
        writeln!(out, "  {} -> {} [label=\"{c}\", style=dashed];", quote(a), quote(&end_id)).unwrap();
    }
    out.push_str("}\n");
    out
}
