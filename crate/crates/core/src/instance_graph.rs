//! Process instance graphs: one typed directly-follows graph per trace.
//!
//! Nodes are the distinct activities of a trace plus the `Start/End`
//! pseudo-node. Edges come from consecutive activity pairs, framed by an
//! edge from `Start/End` to the first activity and from the last activity
//! back to `Start/End`. Repeated pairs collapse onto their first occurrence.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::event_log::{EventLog, Label, Trace};
use crate::numerics::Matrix;

pub const START_END: &str = "Start/End";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Activity(String),
    StartEnd,
}

impl Node {
    pub fn activity(&self) -> Option<&str> {
        match self {
            Node::Activity(a) => Some(a),
            Node::StartEnd => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Activity(a) => f.write_str(a),
            Node::StartEnd => f.write_str(START_END),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    Recursive,
    Start,
    End,
    Backward,
    Forward,
}

impl EdgeType {
    pub const ALL: [EdgeType; 5] = [
        EdgeType::Recursive,
        EdgeType::Start,
        EdgeType::End,
        EdgeType::Backward,
        EdgeType::Forward,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Recursive => "RECURSIVE",
            EdgeType::Start => "START",
            EdgeType::End => "END",
            EdgeType::Backward => "BACKWARD",
            EdgeType::Forward => "FORWARD",
        }
    }
}

impl FromStr for EdgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Schema(format!("unknown edge type {s:?}")))
    }
}

/// Edge direction as seen from the receiving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

/// Number of (edge type, direction) channels.
pub const NUM_CHANNELS: usize = 10;

/// Channel index of an edge type in a direction: `2·type + (0 out | 1 in)`.
pub fn channel(kind: EdgeType, dir: Direction) -> usize {
    2 * kind.index() + usize::from(dir == Direction::In)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: Node,
    pub kind: EdgeType,
    pub target: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceGraph {
    pub case_id: String,
    pub label: Label,
    pub nodes: BTreeSet<Node>,
    /// Edges in first-occurrence order.
    pub edges: Vec<Edge>,
}

/// Edge type of `(source, target)` given the edges already in the graph.
///
/// Cases are checked in order: self-loop, leaving `Start/End`, entering
/// `Start/End`, reverse pair already present, otherwise forward.
pub fn classify_edge(source: &Node, target: &Node, existing: &[Edge]) -> EdgeType {
    if source == target {
        EdgeType::Recursive
    } else if *source == Node::StartEnd {
        EdgeType::Start
    } else if *target == Node::StartEnd {
        EdgeType::End
    } else if existing
        .iter()
        .any(|e| e.source == *target && e.target == *source)
    {
        EdgeType::Backward
    } else {
        EdgeType::Forward
    }
}

pub fn build_instance_graph(trace: &Trace) -> InstanceGraph {
    let acts: Vec<Node> = trace
        .activities()
        .map(|a| Node::Activity(a.to_string()))
        .collect();
    assert!(!acts.is_empty(), "traces are never empty");

    let mut candidates = Vec::with_capacity(acts.len() + 1);
    candidates.push((Node::StartEnd, acts[0].clone()));
    for w in acts.windows(2) {
        candidates.push((w[0].clone(), w[1].clone()));
    }
    candidates.push((acts[acts.len() - 1].clone(), Node::StartEnd));

    let mut seen = HashSet::new();
    let mut edges: Vec<Edge> = Vec::new();
    for (s, t) in candidates {
        if !seen.insert((s.clone(), t.clone())) {
            continue;
        }
        let kind = classify_edge(&s, &t, &edges);
        edges.push(Edge {
            source: s,
            kind,
            target: t,
        });
    }

    let mut nodes: BTreeSet<Node> = acts.into_iter().collect();
    nodes.insert(Node::StartEnd);
    InstanceGraph {
        case_id: trace.case_id().to_string(),
        label: trace.label(),
        nodes,
        edges,
    }
}

impl InstanceGraph {
    /// `case_id \t label \t nodes \t edges`, nodes sorted and `;`-joined,
    /// edges as `src|TYPE|dst` in insertion order.
    pub fn to_dump_line(&self) -> String {
        let nodes: Vec<String> = self.nodes.iter().map(Node::to_string).collect();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}|{}|{}", e.source, e.kind.name(), e.target))
            .collect();
        format!(
            "{}\t{}\t{}\t{}",
            self.case_id,
            self.label.as_u8(),
            nodes.join(";"),
            edges.join(";")
        )
    }

    pub fn from_dump_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [case_id, label, nodes, edges] = fields[..] else {
            return Err(Error::Schema(format!("expected 4 tab-separated fields in {line:?}")));
        };
        let node = |s: &str| {
            if s == START_END {
                Node::StartEnd
            } else {
                Node::Activity(s.to_string())
            }
        };
        let label = match label {
            "0" => Label::Negative,
            "1" => Label::Positive,
            other => return Err(Error::Schema(format!("bad label {other:?}"))),
        };
        let edges = edges
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|e| {
                let parts: Vec<&str> = e.split('|').collect();
                let [s, k, t] = parts[..] else {
                    return Err(Error::Schema(format!("bad edge {e:?}")));
                };
                Ok(Edge {
                    source: node(s),
                    kind: k.parse()?,
                    target: node(t),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            case_id: case_id.to_string(),
            label,
            nodes: nodes.split(';').filter(|s| !s.is_empty()).map(node).collect(),
            edges,
        })
    }
}

/// Activity ↔ dense index map; `Start/End` takes the last index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityVocabulary {
    activities: Vec<String>,
    index: HashMap<String, usize>,
}

impl ActivityVocabulary {
    pub fn from_activities<I, S>(activities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = activities.into_iter().map(Into::into).collect();
        let activities: Vec<String> = set.into_iter().collect();
        let index = activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self { activities, index }
    }

    /// Number of indices including `Start/End`.
    pub fn size(&self) -> usize {
        self.activities.len() + 1
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn start_end_index(&self) -> usize {
        self.activities.len()
    }

    pub fn index_of(&self, node: &Node) -> Option<usize> {
        match node {
            Node::Activity(a) => self.index.get(a).copied(),
            Node::StartEnd => Some(self.start_end_index()),
        }
    }

    pub fn activity_at(&self, index: usize) -> Option<&str> {
        self.activities.get(index).map(String::as_str)
    }
}

pub fn build_vocabulary(log: &EventLog) -> ActivityVocabulary {
    ActivityVocabulary::from_activities(log.activity_universe().iter().cloned())
}

/// Numeric form of an instance graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGraph {
    /// `|V|×D` one-hot rows, zero padded.
    pub annotations: Matrix,
    /// One `|V|×|V|` matrix per channel; the `In` matrix of a type is the
    /// transpose of its `Out` matrix.
    pub adjacency: Vec<Matrix>,
    pub label: Label,
    /// Node position → vocabulary index.
    pub node_vocab: Vec<usize>,
    /// Sparse view of the adjacency: `(receiver, sender, channel)`.
    pub(crate) messages: Vec<(usize, usize, usize)>,
}

impl EncodedGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_vocab.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.annotations.cols()
    }

    /// Builds the encoding directly from typed node-index edges.
    pub fn from_parts(
        node_vocab: Vec<usize>,
        edges: &[(usize, EdgeType, usize)],
        hidden_dim: usize,
        label: Label,
    ) -> Result<Self> {
        let n = node_vocab.len();
        let mut annotations = Matrix::zeros(n, hidden_dim);
        for (row, &v) in node_vocab.iter().enumerate() {
            if v >= hidden_dim {
                return Err(Error::Dimension(format!(
                    "vocabulary index {v} does not fit hidden dimension {hidden_dim}"
                )));
            }
            annotations[(row, v)] = 1.0;
        }
        let mut adjacency = vec![Matrix::zeros(n, n); NUM_CHANNELS];
        let mut messages = Vec::with_capacity(2 * edges.len());
        for &(s, kind, t) in edges {
            if s >= n || t >= n {
                return Err(Error::Dimension(format!("edge ({s}, {t}) outside {n} nodes")));
            }
            let out = channel(kind, Direction::Out);
            let inc = channel(kind, Direction::In);
            adjacency[out][(s, t)] = 1.0;
            adjacency[inc][(t, s)] = 1.0;
            messages.push((s, t, out));
            messages.push((t, s, inc));
        }
        Ok(Self {
            annotations,
            adjacency,
            label,
            node_vocab,
            messages,
        })
    }

    /// Same graph with node `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        if perm.len() != n {
            return Err(Error::Dimension("permutation length".into()));
        }
        let mut node_vocab = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            node_vocab[p] = self.node_vocab[i];
        }
        let edges: Vec<(usize, EdgeType, usize)> = EdgeType::ALL
            .into_iter()
            .flat_map(|kind| {
                let m = &self.adjacency[channel(kind, Direction::Out)];
                (0..n).flat_map(move |s| {
                    (0..n)
                        .filter(move |&t| m[(s, t)] != 0.0)
                        .map(move |t| (perm[s], kind, perm[t]))
                })
            })
            .collect();
        Self::from_parts(node_vocab, &edges, self.hidden_dim(), self.label)
    }
}

pub fn encode_graph(
    g: &InstanceGraph,
    vocab: &ActivityVocabulary,
    hidden_dim: usize,
) -> Result<EncodedGraph> {
    if hidden_dim < vocab.size() {
        return Err(Error::Dimension(format!(
            "hidden dimension {hidden_dim} below vocabulary size {}",
            vocab.size()
        )));
    }
    let mut vocab_ids: Vec<usize> = g
        .nodes
        .iter()
        .map(|n| {
            vocab.index_of(n).ok_or_else(|| {
                Error::Encoding(format!(
                    "activity {n:?} of case {} is not in the vocabulary",
                    g.case_id
                ))
            })
        })
        .collect::<Result<_>>()?;
    vocab_ids.sort_unstable();
    let position: HashMap<usize, usize> = vocab_ids
        .iter()
        .enumerate()
        .map(|(pos, &v)| (v, pos))
        .collect();
    let pos_of = |n: &Node| position[&vocab.index_of(n).expect("checked above")];
    let edges: Vec<(usize, EdgeType, usize)> = g
        .edges
        .iter()
        .map(|e| (pos_of(&e.source), e.kind, pos_of(&e.target)))
        .collect();
    EncodedGraph::from_parts(vocab_ids, &edges, hidden_dim, g.label)
}

/// Encodes every trace of `log`, failing on the first unknown activity.
pub fn encode_log(
    log: &EventLog,
    vocab: &ActivityVocabulary,
    hidden_dim: usize,
) -> Result<Vec<EncodedGraph>> {
    log.traces()
        .iter()
        .map(|t| encode_graph(&build_instance_graph(t), vocab, hidden_dim))
        .collect()
}
