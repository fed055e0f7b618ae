//! Recorded sessions: a header line, one JSON object per input event, and a
//! trailer with the final state hash. Replaying a log through a fresh engine
//! reproduces the recorded run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::RuntimeProgram;
use crate::input::{DeviceProfile, RawEvent};
use crate::runtime::{Engine, EngineError, OutputEvent};
use crate::scene::ClientId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    /// Program digest of the scenario the log was recorded against.
    pub digest: String,
    pub seed: u64,
    pub scenario: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogTrailer {
    pub final_hash: String,
    pub total_ticks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogEntry {
    Join {
        tick: u64,
        client: ClientId,
        profile: DeviceProfile,
    },
    Leave {
        tick: u64,
        client: ClientId,
    },
    Event(RawEvent),
}

impl LogEntry {
    pub fn tick(&self) -> u64 {
        match self {
            LogEntry::Join { tick, .. } | LogEntry::Leave { tick, .. } => *tick,
            LogEntry::Event(e) => e.tick,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Header {
        header: LogHeader,
    },
    Trailer {
        trailer: LogTrailer,
    },
    Join {
        tick: u64,
        client: ClientId,
        join: DeviceProfile,
    },
    Leave {
        tick: u64,
        client: ClientId,
        leave: bool,
    },
    Event(RawEvent),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log has no header line")]
    MissingHeader,
    #[error("line {line}: tick {tick} goes backwards")]
    NonMonotonic { line: usize, tick: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: LogHeader,
    pub entries: Vec<LogEntry>,
    pub trailer: Option<LogTrailer>,
}

fn line_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("log lines always serialize");
    s.push('\n');
    s
}

impl EventLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            entries: Vec::new(),
            trailer: None,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = line_json(&Line::Header {
            header: self.header.clone(),
        });
        for e in &self.entries {
            out.push_str(&entry_line(e));
        }
        if let Some(t) = &self.trailer {
            out.push_str(&line_json(&Line::Trailer { trailer: t.clone() }));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut header = None;
        let mut entries = Vec::new();
        let mut trailer = None;
        let mut last_tick = 0;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| LogError::Parse {
                line: n,
                message: e.to_string(),
            })?;
            let entry = match line {
                Line::Header { header: h } => {
                    header = Some(h);
                    continue;
                }
                Line::Trailer { trailer: t } => {
                    trailer = Some(t);
                    continue;
                }
                Line::Join { tick, client, join } => LogEntry::Join {
                    tick,
                    client,
                    profile: join,
                },
                Line::Leave { tick, client, .. } => LogEntry::Leave { tick, client },
                Line::Event(e) => LogEntry::Event(e),
            };
            if entry.tick() < last_tick {
                return Err(LogError::NonMonotonic {
                    line: n,
                    tick: entry.tick(),
                });
            }
            last_tick = entry.tick();
            entries.push(entry);
        }
        Ok(Self {
            header: header.ok_or(LogError::MissingHeader)?,
            entries,
            trailer,
        })
    }
}

/// Serializes one log entry as a JSON line.
pub fn entry_line(e: &LogEntry) -> String {
    match e {
        LogEntry::Join {
            tick,
            client,
            profile,
        } => line_json(&Line::Join {
            tick: *tick,
            client: *client,
            join: profile.clone(),
        }),
        LogEntry::Leave { tick, client } => line_json(&Line::Leave {
            tick: *tick,
            client: *client,
            leave: true,
        }),
        LogEntry::Event(ev) => line_json(ev),
    }
}

/// Result of driving an engine through a list of entries.
#[derive(Debug, Clone)]
pub struct DriveResult {
    pub engine: Engine,
    /// Every output with the tick it was produced at.
    pub outputs: Vec<(u64, OutputEvent)>,
    /// Rejected entries (index into the entry list) and why.
    pub rejected: Vec<(usize, EngineError)>,
}

/// Feeds `entries` to a fresh engine in order: each entry is applied once the
/// clock reaches its tick. The clock then runs on to `end_tick`.
pub fn drive(
    program: RuntimeProgram,
    seed: u64,
    entries: &[LogEntry],
    end_tick: u64,
) -> Result<DriveResult, EngineError> {
    let (mut engine, initial) = Engine::new(program, seed)?;
    let mut outputs: Vec<(u64, OutputEvent)> = initial.into_iter().map(|o| (0, o)).collect();
    let mut rejected = Vec::new();
    let mut profiles: BTreeMap<ClientId, DeviceProfile> = BTreeMap::new();

    let advance = |engine: &mut Engine, outputs: &mut Vec<(u64, OutputEvent)>, to: u64| {
        while engine.now() < to {
            let out = engine.tick(1);
            let t = engine.now();
            outputs.extend(out.into_iter().map(|o| (t, o)));
        }
    };

    for (i, entry) in entries.iter().enumerate() {
        advance(&mut engine, &mut outputs, entry.tick());
        let now = engine.now();
        match entry {
            LogEntry::Join { client, profile, .. } => {
                engine.add_client(*client);
                profiles.insert(*client, profile.clone());
            }
            LogEntry::Leave { client, .. } => {
                let out = engine.remove_client(*client);
                profiles.remove(client);
                outputs.extend(out.into_iter().map(|o| (now, o)));
            }
            LogEntry::Event(ev) => {
                let Some(profile) = profiles.get(&ev.client) else {
                    rejected.push((i, EngineError::UnknownClient(ev.client)));
                    continue;
                };
                match engine.handle_raw(profile, ev) {
                    Ok(out) => outputs.extend(out.into_iter().map(|o| (now, o))),
                    Err(e) => rejected.push((i, e)),
                }
            }
        }
    }
    advance(&mut engine, &mut outputs, end_tick);
    Ok(DriveResult {
        engine,
        outputs,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{DeviceKind, RawKind};
    use crate::scene::Hand;

    #[test]
    fn jsonl_round_trip() {
        let mut log = EventLog::new(LogHeader {
            digest: "ab".into(),
            seed: 3,
            scenario: "x.scn".into(),
        });
        log.entries.push(LogEntry::Join {
            tick: 0,
            client: 1,
            profile: DeviceKind::VR.profile(),
        });
        log.entries.push(LogEntry::Event(RawEvent {
            tick: 4,
            client: 1,
            raw: RawKind::VrGripDown { hand: Hand::Left },
        }));
        log.entries.push(LogEntry::Leave { tick: 9, client: 1 });
        log.trailer = Some(LogTrailer {
            final_hash: "0123456789abcdef".into(),
            total_ticks: 20,
        });
        let text = log.to_jsonl();
        assert!(text.lines().nth(2).unwrap().starts_with(r#"{"tick":4,"client":1,"raw":"#));
        assert_eq!(EventLog::parse(&text).unwrap(), log);
    }

    #[test]
    fn rejects_backwards_ticks_and_missing_header() {
        let e1 = r#"{"tick":5,"client":1,"raw":{"kind":"ar_tap_up"}}"#;
        let e2 = r#"{"tick":4,"client":1,"raw":{"kind":"ar_tap_up"}}"#;
        let h = r#"{"header":{"digest":"d","seed":0,"scenario":"s"}}"#;
        assert!(matches!(
            EventLog::parse(&format!("{h}\n{e1}\n{e2}\n")),
            Err(LogError::NonMonotonic { line: 3, tick: 4 })
        ));
        assert_eq!(EventLog::parse(e1), Err(LogError::MissingHeader));
        assert!(matches!(EventLog::parse("{"), Err(LogError::Parse { line: 1, .. })));
    }
}
