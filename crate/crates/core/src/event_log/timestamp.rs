use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use super::Timestamp;
use crate::error::{Error, Result};

/// Timestamp pattern in the familiar `dd.MM.yy HH:mm:ss` notation.
///
/// Recognised tokens: `yyyy`, `yy`, `MM`, `dd`, `HH`, `mm`, `ss`, `SSS`.
/// Everything else is a literal. The keyword `ISO8601` selects RFC 3339
/// parsing instead. Values are interpreted as UTC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampFormat {
    pattern: String,
    chrono: Option<String>,
    has_time: bool,
}

impl Default for TimestampFormat {
    fn default() -> Self {
        Self::new("dd.MM.yy HH:mm:ss")
    }
}

const TOKENS: [(&str, &str); 8] = [
    ("yyyy", "%Y"),
    ("yy", "%y"),
    ("MM", "%m"),
    ("dd", "%d"),
    ("HH", "%H"),
    ("mm", "%M"),
    ("ss", "%S"),
    ("SSS", "%3f"),
];

impl TimestampFormat {
    pub fn new(pattern: &str) -> Self {
        if pattern.eq_ignore_ascii_case("iso8601") {
            return Self {
                pattern: pattern.to_string(),
                chrono: None,
                has_time: true,
            };
        }
        let mut out = String::new();
        let mut rest = pattern;
        let mut has_time = false;
        'outer: while !rest.is_empty() {
            for (tok, spec) in TOKENS {
                if let Some(tail) = rest.strip_prefix(tok) {
                    has_time |= tok == "HH";
                    out.push_str(spec);
                    rest = tail;
                    continue 'outer;
                }
            }
            let c = rest.chars().next().unwrap();
            if c == '%' {
                out.push_str("%%");
            } else {
                out.push(c);
            }
            rest = &rest[c.len_utf8()..];
        }
        Self {
            pattern: pattern.to_string(),
            chrono: Some(out),
            has_time,
        }
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn parse(&self, text: &str) -> Result<Timestamp> {
        let text = text.trim();
        let bad = |e: chrono::ParseError| {
            Error::Schema(format!(
                "cannot parse timestamp {text:?} with pattern {:?}: {e}",
                self.pattern
            ))
        };
        let Some(fmt) = &self.chrono else {
            return DateTime::parse_from_rfc3339(text)
                .map(|dt| dt.timestamp_millis())
                .map_err(bad);
        };
        let naive = if self.has_time {
            NaiveDateTime::parse_from_str(text, fmt).map_err(bad)?
        } else {
            NaiveDate::parse_from_str(text, fmt)
                .map_err(bad)?
                .and_hms_opt(0, 0, 0)
                .expect("midnight is valid")
        };
        Ok(naive.and_utc().timestamp_millis())
    }

    pub fn format(&self, ts: Timestamp) -> String {
        let dt = DateTime::<Utc>::from_timestamp_millis(ts).unwrap_or_default();
        match &self.chrono {
            Some(fmt) => dt.format(fmt).to_string(),
            None => dt.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}
