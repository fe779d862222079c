//! Labelled event logs: parsing, statistics, fold splitting, synthesis.

mod csv_io;
mod split;
mod synth;
mod timestamp;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

pub use csv_io::{parse_csv, parse_csv_path, write_csv, write_csv_path, SchemaConfig};
pub use split::{split_folds, FoldSplit};
pub use synth::{generate_synthetic_log, SynthSpec};
pub use timestamp::TimestampFormat;

use crate::error::{Error, Result};

/// Milliseconds since the Unix epoch, UTC.
pub type Timestamp = i64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub activity: String,
    pub case_id: String,
    pub timestamp: Timestamp,
}

/// Binary process outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative = 0,
    Positive = 1,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    case_id: String,
    events: Vec<Event>,
    label: Label,
}

impl Trace {
    /// Validates non-emptiness, a shared case id, and non-decreasing timestamps.
    pub fn new(case_id: impl Into<String>, events: Vec<Event>, label: Label) -> Result<Self> {
        let case_id = case_id.into();
        if case_id.is_empty() {
            return Err(Error::Consistency("empty case id".into()));
        }
        if events.is_empty() {
            return Err(Error::EmptyInput(format!("trace {case_id} has no events")));
        }
        for e in &events {
            if e.case_id != case_id {
                return Err(Error::Consistency(format!(
                    "event of case {} inside trace {case_id}",
                    e.case_id
                )));
            }
            if e.activity.is_empty() {
                return Err(Error::Consistency(format!("empty activity in case {case_id}")));
            }
        }
        if events.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
            return Err(Error::Consistency(format!(
                "timestamps of case {case_id} are not ordered"
            )));
        }
        Ok(Self {
            case_id,
            events,
            label,
        })
    }

    /// Trace from a bare activity sequence with synthetic one-minute spacing.
    pub fn from_activities<S: AsRef<str>>(
        case_id: &str,
        activities: &[S],
        label: Label,
    ) -> Result<Self> {
        let events = activities
            .iter()
            .enumerate()
            .map(|(i, a)| Event {
                activity: a.as_ref().to_string(),
                case_id: case_id.to_string(),
                timestamp: i as i64 * 60_000,
            })
            .collect();
        Self::new(case_id, events, label)
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> + '_ {
        self.events.iter().map(|e| e.activity.as_str())
    }

    /// Copy of the trace without any event of `activity`; `None` if nothing remains.
    pub fn without_activity(&self, activity: &str) -> Option<Trace> {
        let events: Vec<Event> = self
            .events
            .iter()
            .filter(|e| e.activity != activity)
            .cloned()
            .collect();
        if events.is_empty() {
            None
        } else {
            Some(Trace {
                case_id: self.case_id.clone(),
                events,
                label: self.label,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
    activity_universe: BTreeSet<String>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(traces.len());
        for t in &traces {
            if !seen.insert(t.case_id.as_str()) {
                return Err(Error::Consistency(format!("duplicate case id {}", t.case_id)));
            }
        }
        let activity_universe = traces
            .iter()
            .flat_map(|t| t.activities().map(str::to_string))
            .collect();
        Ok(Self {
            traces,
            activity_universe,
        })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn activity_universe(&self) -> &BTreeSet<String> {
        &self.activity_universe
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    /// Sub-log with the traces at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<EventLog> {
        EventLog::new(indices.iter().map(|&i| self.traces[i].clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogStats {
    pub num_instances: usize,
    pub num_events: usize,
    pub num_activities: usize,
    /// `(positive %, negative %)`.
    pub class_distribution: (f64, f64),
    pub max_trace_length: usize,
}

pub fn log_statistics(log: &EventLog) -> Result<LogStats> {
    if log.is_empty() {
        return Err(Error::EmptyInput("event log has no traces".into()));
    }
    let positives = log
        .traces
        .iter()
        .filter(|t| t.label == Label::Positive)
        .count();
    let n = log.len() as f64;
    Ok(LogStats {
        num_instances: log.len(),
        num_events: log.num_events(),
        num_activities: log.activity_universe.len(),
        class_distribution: (
            100.0 * positives as f64 / n,
            100.0 * (log.len() - positives) as f64 / n,
        ),
        max_trace_length: log.traces.iter().map(Trace::len).max().unwrap_or(0),
    })
}

impl LogStats {
    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "num_instances={}\nnum_events={}\nnum_activities={}\npositive_pct={:.2}\nnegative_pct={:.2}\nmax_trace_length={}\n",
            self.num_instances,
            self.num_events,
            self.num_activities,
            self.class_distribution.0,
            self.class_distribution.1,
            self.max_trace_length
        )
    }
}

impl fmt::Display for LogStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("# instances", self.num_instances.to_string()),
            ("# events", self.num_events.to_string()),
            ("# activities", self.num_activities.to_string()),
            (
                "class distribution (pos/neg %)",
                format!(
                    "{:.2}/{:.2}",
                    self.class_distribution.0, self.class_distribution.1
                ),
            ),
            ("max trace length", self.max_trace_length.to_string()),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(f, "{k:<width$}  {v:>12}")?;
        }
        Ok(())
    }
}
