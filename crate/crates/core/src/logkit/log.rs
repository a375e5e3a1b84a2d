//! Event logs: parsing JSONL and CSV, role policies.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Side;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("event name {0:?} occurs more than once")]
    DuplicateEventName(String),
    #[error("event {0:?} has no agents")]
    EmptyAgentSet(String),
    #[error("line {line}: bad timestamp {value:?}")]
    BadTimestamp { line: usize, value: String },
    #[error("role {0:?} has no side")]
    RoleWithoutSide(String),
    #[error("cannot read role policy: {0}")]
    BadPolicy(String),
}

/// One log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub name: String,
    pub agents: BTreeSet<String>,
    pub data: BTreeMap<String, String>,
    pub timestamp: DateTime<FixedOffset>,
}

impl Event {
    pub fn involves(&self, agent: &str) -> bool {
        self.agents.contains(agent)
    }
}

/// Events sorted by timestamp; events with equal timestamps keep their
/// input order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    /// Validates name uniqueness and agent sets, then sorts stably by time.
    pub fn new(mut events: Vec<Event>) -> Result<Self, LogError> {
        let mut names = BTreeSet::new();
        for e in &events {
            if e.agents.is_empty() {
                return Err(LogError::EmptyAgentSet(e.name.clone()));
            }
            if !names.insert(e.name.as_str()) {
                return Err(LogError::DuplicateEventName(e.name.clone()));
            }
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(EventLog { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn agents(&self) -> BTreeSet<&str> {
        self.events
            .iter()
            .flat_map(|e| e.agents.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl LogFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct JsonEvent {
    name: String,
    agents: Vec<String>,
    #[serde(default)]
    data: BTreeMap<String, String>,
    ts: String,
}

fn timestamp(line: usize, value: &str) -> Result<DateTime<FixedOffset>, LogError> {
    DateTime::parse_from_rfc3339(value.trim()).map_err(|_| LogError::BadTimestamp {
        line,
        value: value.to_string(),
    })
}

pub fn parse_log(input: impl Read, format: LogFormat) -> Result<EventLog, LogError> {
    let events = match format {
        LogFormat::Jsonl => parse_jsonl(input)?,
        LogFormat::Csv => parse_csv(input)?,
    };
    EventLog::new(events)
}

fn parse_jsonl(input: impl Read) -> Result<Vec<Event>, LogError> {
    let mut events = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| LogError::ParseError {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonEvent = serde_json::from_str(&line).map_err(|e| LogError::ParseError {
            line: line_no,
            reason: e.to_string(),
        })?;
        events.push(Event {
            timestamp: timestamp(line_no, &raw.ts)?,
            name: raw.name,
            agents: raw.agents.into_iter().collect(),
            data: raw.data,
        });
    }
    Ok(events)
}

fn parse_csv(input: impl Read) -> Result<Vec<Event>, LogError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| LogError::ParseError { line: 1, reason: e.to_string() })?
        .clone();
    let expected = ["name", "agents", "data", "ts"];
    if !headers.is_empty() && headers.iter().collect::<Vec<_>>() != expected {
        return Err(LogError::ParseError {
            line: 1,
            reason: format!("expected header {}", expected.join(",")),
        });
    }
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| LogError::ParseError {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or_default();
        let agents = field(1)
            .split(';')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(String::from)
            .collect();
        let mut data = BTreeMap::new();
        for pair in field(2).split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| LogError::ParseError {
                line,
                reason: format!("data entry {pair:?} is not k=v"),
            })?;
            data.insert(k.trim().to_string(), v.trim().to_string());
        }
        events.push(Event {
            name: field(0).to_string(),
            agents,
            data,
            timestamp: timestamp(line, field(3))?,
        });
    }
    Ok(events)
}

/// Assigns each agent a role and each role an interface side.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RolePolicy {
    pub roles: BTreeMap<String, String>,
    pub sides: BTreeMap<String, Side>,
}

impl RolePolicy {
    pub fn new(
        roles: BTreeMap<String, String>,
        sides: BTreeMap<String, Side>,
    ) -> Result<Self, LogError> {
        if let Some(role) = roles.values().find(|r| !sides.contains_key(*r)) {
            return Err(LogError::RoleWithoutSide(role.clone()));
        }
        Ok(RolePolicy { roles, sides })
    }

    pub fn from_json(input: impl Read) -> Result<Self, LogError> {
        let raw: RolePolicy =
            serde_json::from_reader(input).map_err(|e| LogError::BadPolicy(e.to_string()))?;
        RolePolicy::new(raw.roles, raw.sides)
    }

    pub fn role_of(&self, agent: &str) -> Option<&str> {
        self.roles.get(agent).map(String::as_str)
    }

    pub fn side_of(&self, agent: &str) -> Option<Side> {
        self.sides.get(self.role_of(agent)?).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RETAIL: &str = include_str!("../../fixtures/retail.jsonl");

    #[test]
    fn retail_fixture_parses() {
        let log = parse_log(RETAIL.as_bytes(), LogFormat::Jsonl).unwrap();
        assert_eq!(log.len(), 7);
        assert_eq!(
            log.agents().into_iter().collect::<Vec<_>>(),
            ["Alice", "Bob", "Claire", "V1", "V2", "cashier"]
        );
    }

    #[test]
    fn empty_input_is_empty_log() {
        assert!(parse_log("".as_bytes(), LogFormat::Jsonl).unwrap().is_empty());
        assert!(parse_log("name,agents,data,ts\n".as_bytes(), LogFormat::Csv).unwrap().is_empty());
        assert!(parse_log("".as_bytes(), LogFormat::Csv).unwrap().is_empty());
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"{"name":"handing over","agents":["V1"],"ts":"2024-01-01T09:00:00Z"}
{"name":"handing over","agents":["Alice"],"ts":"2024-01-01T09:01:00Z"}"#;
        assert_eq!(
            parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap_err(),
            LogError::DuplicateEventName("handing over".into())
        );
    }

    #[test]
    fn empty_agents_rejected() {
        let text = r#"{"name":"e","agents":[],"ts":"2024-01-01T09:00:00Z"}"#;
        assert_eq!(
            parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap_err(),
            LogError::EmptyAgentSet("e".into())
        );
    }

    #[test]
    fn bad_timestamp_and_bad_json() {
        let text = r#"{"name":"e","agents":["a"],"ts":"yesterday"}"#;
        assert!(matches!(
            parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap_err(),
            LogError::BadTimestamp { line: 1, .. }
        ));
        let text = "\n{\"name\": 3}";
        assert!(matches!(
            parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap_err(),
            LogError::ParseError { line: 2, .. }
        ));
    }

    #[test]
    fn events_sorted_stably_by_time() {
        let text = r#"{"name":"late","agents":["a"],"ts":"2024-01-01T10:00:00Z"}
{"name":"tie1","agents":["a"],"ts":"2024-01-01T09:00:00Z"}
{"name":"tie2","agents":["a"],"ts":"2024-01-01T09:00:00+00:00"}"#;
        let log = parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap();
        let names: Vec<&str> = log.events().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["tie1", "tie2", "late"]);
    }

    #[test]
    fn csv_matches_jsonl() {
        let csv_text = "name,agents,data,ts\n\
            shirt to take home,V1;Alice,item=shirt;price=50 €,2024-01-01T09:00:00Z\n\
            V1 packs shirt,V1,,2024-01-01T09:03:00Z\n";
        let log = parse_log(csv_text.as_bytes(), LogFormat::Csv).unwrap();
        assert_eq!(log.len(), 2);
        let e = &log.events()[0];
        assert_eq!(e.agents, BTreeSet::from(["Alice".to_string(), "V1".to_string()]));
        assert_eq!(e.data["price"], "50 €");
        assert!(log.events()[1].data.is_empty());
    }

    #[test]
    fn csv_bad_header_and_data() {
        assert!(parse_log("a,b\n".as_bytes(), LogFormat::Csv).is_err());
        let text = "name,agents,data,ts\ne,a,oops,2024-01-01T09:00:00Z\n";
        assert!(matches!(
            parse_log(text.as_bytes(), LogFormat::Csv).unwrap_err(),
            LogError::ParseError { line: 2, .. }
        ));
    }

    #[test]
    fn policy_requires_sides() {
        let text = r#"{"roles":{"V1":"vendor"},"sides":{}}"#;
        assert_eq!(
            RolePolicy::from_json(text.as_bytes()).unwrap_err(),
            LogError::RoleWithoutSide("vendor".into())
        );
        let text = r#"{"roles":{"V1":"vendor"},"sides":{"vendor":"right"}}"#;
        let p = RolePolicy::from_json(text.as_bytes()).unwrap();
        assert_eq!(p.side_of("V1"), Some(Side::Right));
        assert_eq!(p.side_of("Bob"), None);
    }
}
