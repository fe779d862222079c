use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Event, EventLog, Label, TimestampFormat, Trace};
use crate::error::{Error, Result};

/// Column names and value conventions of an event-log CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaConfig {
    pub case_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
    pub label_column: String,
    pub timestamp_format: TimestampFormat,
    /// Label cell value (case-insensitive) that marks a positive outcome.
    pub positive_label_value: String,
    /// Written for negative traces when serialising.
    pub negative_label_value: String,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self {
            case_column: "case".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
            label_column: "label".into(),
            timestamp_format: TimestampFormat::default(),
            positive_label_value: "true".into(),
            negative_label_value: "false".into(),
        }
    }
}

impl SchemaConfig {
    pub fn validate(&self) -> Result<()> {
        let cols = [
            &self.case_column,
            &self.activity_column,
            &self.timestamp_column,
            &self.label_column,
        ];
        for (i, a) in cols.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::Config("empty column name in schema".into()));
            }
            if cols[i + 1..].contains(a) {
                return Err(Error::Config(format!("column {a:?} configured twice")));
            }
        }
        if self.positive_label_value.eq_ignore_ascii_case(&self.negative_label_value) {
            return Err(Error::Config(
                "positive and negative label values coincide".into(),
            ));
        }
        Ok(())
    }
}

struct CaseAccumulator {
    case_id: String,
    events: Vec<Event>,
    label: Option<(Label, u64)>,
}

/// Reads a labelled event log.
///
/// Rows are grouped by case in order of first appearance; each case is then
/// sorted by timestamp with a stable sort, so ties keep file order. The
/// label may appear on every row or only on some rows of a case, but all
/// non-empty label cells of a case must agree.
pub fn parse_csv<R: Read>(source: R, schema: &SchemaConfig) -> Result<EventLog> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let case_col = column(&schema.case_column)?;
    let activity_col = column(&schema.activity_column)?;
    let ts_col = column(&schema.timestamp_column)?;
    let label_col = column(&schema.label_column)?;

    let mut cases: Vec<CaseAccumulator> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let row_err = |message: String| Error::Row { line, message };

        let case_id = field(case_col);
        let activity = field(activity_col);
        if case_id.is_empty() {
            return Err(row_err("empty case id".into()));
        }
        if activity.is_empty() {
            return Err(row_err("empty activity".into()));
        }
        let timestamp = schema
            .timestamp_format
            .parse(field(ts_col))
            .map_err(|e| row_err(e.to_string()))?;

        let slot = *index.entry(case_id.to_string()).or_insert_with(|| {
            cases.push(CaseAccumulator {
                case_id: case_id.to_string(),
                events: Vec::new(),
                label: None,
            });
            cases.len() - 1
        });
        let acc = &mut cases[slot];
        let label_text = field(label_col);
        if !label_text.is_empty() {
            let label =
                Label::from_bool(label_text.eq_ignore_ascii_case(&schema.positive_label_value));
            match acc.label {
                None => acc.label = Some((label, line)),
                Some((prev, prev_line)) if prev != label => {
                    return Err(Error::Consistency(format!(
                        "case {case_id}: label on line {line} contradicts line {prev_line}"
                    )))
                }
                Some(_) => {}
            }
        }
        acc.events.push(Event {
            activity: activity.to_string(),
            case_id: case_id.to_string(),
            timestamp,
        });
    }

    if cases.is_empty() {
        return Err(Error::EmptyInput("event log has no rows".into()));
    }
    let traces = cases
        .into_iter()
        .map(|mut acc| {
            let (label, _) = acc.label.ok_or_else(|| {
                Error::Consistency(format!("case {} has no label", acc.case_id))
            })?;
            acc.events.sort_by_key(|e| e.timestamp);
            Trace::new(acc.case_id, acc.events, label)
        })
        .collect::<Result<Vec<_>>>()?;
    EventLog::new(traces)
}

pub fn parse_csv_path(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<EventLog> {
    parse_csv(File::open(path)?, schema)
}

/// Writes one row per event, cases in log order, label on every row.
pub fn write_csv<W: Write>(log: &EventLog, schema: &SchemaConfig, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record([
        &schema.case_column,
        &schema.activity_column,
        &schema.timestamp_column,
        &schema.label_column,
    ])?;
    for trace in log.traces() {
        let label = match trace.label() {
            Label::Positive => &schema.positive_label_value,
            Label::Negative => &schema.negative_label_value,
        };
        for e in trace.events() {
            writer.write_record([
                e.case_id.as_str(),
                e.activity.as_str(),
                schema.timestamp_format.format(e.timestamp).as_str(),
                label.as_str(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_path(log: &EventLog, schema: &SchemaConfig, path: impl AsRef<Path>) -> Result<()> {
    write_csv(log, schema, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    pub(crate) const TABLE_ONE: &str = "\
Case,Activity,Timestamp,Travel expense overspent
1,Start Trip,01.02.16 10:06:00,True
1,Permit S,01.02.16 11:43:00,
1,Permit A,01.02.16 13:00:10,
1,Permit A,01.02.16 15:10:00,
1,Permit F_A,02.02.16 12:00:04,
1,End trip,03.02.16 17:30:39,
1,Send Reminder,04.02.16 12:00:00,
1,Send Reminder,05.02.16 12:00:00,
";

    fn table_one_schema() -> SchemaConfig {
        SchemaConfig {
            case_column: "Case".into(),
            activity_column: "Activity".into(),
            timestamp_column: "Timestamp".into(),
            label_column: "Travel expense overspent".into(),
            ..SchemaConfig::default()
        }
    }

    #[test]
    fn parses_the_example_case() {
        let log = parse_csv(TABLE_ONE.as_bytes(), &table_one_schema()).unwrap();
        assert_eq!(log.len(), 1);
        let t = &log.traces()[0];
        assert_eq!(t.len(), 8);
        assert_eq!(t.label(), Label::Positive);
        let acts: Vec<_> = t.activities().collect();
        assert_eq!(acts.first(), Some(&"Start Trip"));
        assert_eq!(acts.last(), Some(&"Send Reminder"));
        assert_eq!(log.activity_universe().len(), 6);
    }

    #[test]
    fn single_row() {
        let csv = "case,activity,timestamp,label\nx,A,01.01.20 00:00:00,false\n";
        let log = parse_csv(csv.as_bytes(), &SchemaConfig::default()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.traces()[0].len(), 1);
        assert_eq!(log.traces()[0].label(), Label::Negative);
    }

    #[test]
    fn interleaved_shuffled_rows_match_sort_oracle() {
        let mut rng = Rng::new(8);
        let mut rows = Vec::new();
        for i in 0..40 {
            let case = if rng.bernoulli(0.5) { "a" } else { "b" };
            // coarse timestamps force plenty of ties
            let minute = rng.below(6);
            rows.push((case.to_string(), format!("act{i}"), minute));
        }
        let mut csv = String::from("case,activity,timestamp,label\n");
        for (c, a, m) in &rows {
            csv.push_str(&format!("{c},{a},01.01.20 00:{m:02}:00,{}\n", c == "a"));
        }
        let log = parse_csv(csv.as_bytes(), &SchemaConfig::default()).unwrap();

        // oracle: stable sort of (case, minute) keys over file order
        let mut keyed: Vec<(usize, &(String, String, usize))> = rows.iter().enumerate().collect();
        keyed.sort_by(|(i, x), (j, y)| (x.0.as_str(), x.2, *i).cmp(&(y.0.as_str(), y.2, *j)));
        for trace in log.traces() {
            let want: Vec<&str> = keyed
                .iter()
                .filter(|(_, r)| r.0 == trace.case_id())
                .map(|(_, r)| r.1.as_str())
                .collect();
            assert_eq!(trace.activities().collect::<Vec<_>>(), want);
        }
    }

    #[test]
    fn error_paths() {
        let s = SchemaConfig::default();
        let missing = "case,activity,timestamp\n1,A,01.01.20 00:00:00\n";
        assert!(matches!(parse_csv(missing.as_bytes(), &s), Err(Error::Schema(_))));

        let bad_ts = "case,activity,timestamp,label\n1,A,01.01.20 00:00:00,true\n1,B,yesterday,true\n";
        match parse_csv(bad_ts.as_bytes(), &s) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected row error, got {other:?}"),
        }

        let conflict = "case,activity,timestamp,label\n1,A,01.01.20 00:00:00,true\n1,B,01.01.20 00:01:00,false\n";
        assert!(matches!(
            parse_csv(conflict.as_bytes(), &s),
            Err(Error::Consistency(_))
        ));

        let empty = "case,activity,timestamp,label\n";
        assert!(matches!(parse_csv(empty.as_bytes(), &s), Err(Error::EmptyInput(_))));

        let dup = SchemaConfig {
            label_column: "case".into(),
            ..SchemaConfig::default()
        };
        assert!(matches!(parse_csv(empty.as_bytes(), &dup), Err(Error::Config(_))));
    }

    #[test]
    fn quoted_fields() {
        let csv = "case,activity,timestamp,label\n\"c,1\",\"Say \"\"hi\"\"\",01.01.20 00:00:00,true\n";
        let log = parse_csv(csv.as_bytes(), &SchemaConfig::default()).unwrap();
        assert_eq!(log.traces()[0].case_id(), "c,1");
        assert_eq!(log.traces()[0].events()[0].activity, "Say \"hi\"");
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(
            cases in proptest::collection::vec(
                (proptest::collection::vec((0usize..5, 0i64..1000), 1..8), any::<bool>()),
                1..6,
            )
        ) {
            let traces: Vec<Trace> = cases
                .iter()
                .enumerate()
                .map(|(i, (events, pos))| {
                    let mut evs: Vec<Event> = events
                        .iter()
                        .map(|(a, minute)| Event {
                            activity: format!("act {a}"),
                            case_id: format!("case-{i}"),
                            timestamp: minute * 60_000,
                        })
                        .collect();
                    evs.sort_by_key(|e| e.timestamp);
                    Trace::new(format!("case-{i}"), evs, Label::from_bool(*pos)).unwrap()
                })
                .collect();
            let log = EventLog::new(traces).unwrap();
            let schema = SchemaConfig::default();
            let mut buf = Vec::new();
            write_csv(&log, &schema, &mut buf).unwrap();
            let once = parse_csv(buf.as_slice(), &schema).unwrap();
            prop_assert_eq!(&once, &log);
            let mut buf2 = Vec::new();
            write_csv(&once, &schema, &mut buf2).unwrap();
            prop_assert_eq!(parse_csv(buf2.as_slice(), &schema).unwrap(), once);
        }
    }
}
