use std::collections::BTreeMap;

use serde::Serialize;
use xrsim_core::eventlog::DriveResult;
use xrsim_core::netsync::hash_hex;
use xrsim_core::runtime::{NotifyLevel, OutputEvent};
use xrsim_core::ClientId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub path: String,
    pub tick: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LevelCounts {
    pub info: u64,
    pub warning: u64,
    pub error: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QuizCounts {
    pub correct: u64,
    pub wrong: u64,
}

/// Message counters for one client. `received` is only known when the run
/// went through a (simulated or real) network.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClientMessages {
    pub inputs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sent: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub received: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub tick: u64,
    pub client: ClientId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: &'static str,
    pub scenario: String,
    pub digest: String,
    pub seed: u64,
    pub final_hash: String,
    pub completed: bool,
    /// In program order.
    pub actions_completed: Vec<Completion>,
    pub notifications: LevelCounts,
    pub quiz_feedback: QuizCounts,
    pub total_ticks: u64,
    pub messages: BTreeMap<ClientId, ClientMessages>,
    pub rejected: Vec<Rejection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recorded_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hash_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}

impl RunReport {
    /// Summarizes a drive. `rejected` carries (tick, client) for each
    /// rejected entry since the drive only knows entry indices.
    pub fn from_drive(
        mode: &'static str,
        scenario: String,
        seed: u64,
        result: &DriveResult,
        rejected: Vec<Rejection>,
        messages: BTreeMap<ClientId, ClientMessages>,
    ) -> Self {
        let engine = &result.engine;
        let mut notifications = LevelCounts::default();
        let mut quiz_feedback = QuizCounts::default();
        for (_, o) in &result.outputs {
            match o {
                OutputEvent::Notification { level, .. } => match level {
                    NotifyLevel::Info => notifications.info += 1,
                    NotifyLevel::Warning => notifications.warning += 1,
                    NotifyLevel::Error => notifications.error += 1,
                },
                OutputEvent::QuizFeedback { correct: true, .. } => quiz_feedback.correct += 1,
                OutputEvent::QuizFeedback { correct: false, .. } => quiz_feedback.wrong += 1,
                _ => {}
            }
        }
        Self {
            mode,
            scenario,
            digest: engine.program().digest.clone(),
            seed,
            final_hash: hash_hex(engine.state_hash()),
            completed: engine.is_complete(),
            actions_completed: engine
                .completions()
                .iter()
                .map(|(path, tick)| Completion {
                    path: path.clone(),
                    tick: *tick,
                })
                .collect(),
            notifications,
            quiz_feedback,
            total_ticks: engine.now(),
            messages,
            rejected,
            recorded_hash: None,
            hash_match: None,
            log: None,
        }
    }

    /// One JSON line.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize") + "\n"
    }
}
