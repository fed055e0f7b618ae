use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ast::*;
use super::diag::{has_errors, Diagnostic};
use super::render::render;
use super::validate::validate;
use crate::math::{Pose, Vec3};
use crate::scene::{GrabMode, Region, Tag};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("scenario has {} outstanding error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Invalid(Vec<Diagnostic>),
}

/// Index into [`RuntimeProgram::assets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssetIndex(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetEntry {
    pub id: String,
    pub initial_pose: Pose,
    pub tags: BTreeSet<Tag>,
    /// `(delay seconds, line)` in playback order.
    pub narration: Vec<(f64, String)>,
    /// Id of the speaking asset.
    pub narrator: String,
    pub ik: Option<(f64, f64)>,
    pub grab_mode: GrabMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AidlinePayload {
    pub text: String,
    pub anchor: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuizChoice {
    pub label: String,
    pub icon: Option<AssetIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Insert {
        object: AssetIndex,
        target: Pose,
        hologram: String,
        aidline: Option<AidlinePayload>,
    },
    Remove {
        object: AssetIndex,
        clearance_m: f64,
    },
    Tool {
        tool: AssetIndex,
        region: Region,
        required_active_s: f64,
    },
    Use {
        implement: AssetIndex,
        region: Region,
        required_sweep_m: f64,
    },
    Quiz {
        question: String,
        choices: Vec<QuizChoice>,
        correct: usize,
    },
}

impl Task {
    /// The scene object the action is about (none for quizzes).
    pub fn subject(&self) -> Option<AssetIndex> {
        match self {
            Task::Insert { object, .. } | Task::Remove { object, .. } => Some(*object),
            Task::Tool { tool, .. } => Some(*tool),
            Task::Use { implement, .. } => Some(*implement),
            Task::Quiz { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramAction {
    /// `<lesson>/<stage>/<action>`.
    pub path: String,
    pub task: Task,
}

/// Flat, validated action list in document (= execution) order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeProgram {
    pub name: String,
    /// Hex SHA-256 of the canonical rendering of the source document.
    pub digest: String,
    pub assets: Vec<AssetEntry>,
    pub actions: Vec<ProgramAction>,
}

impl RuntimeProgram {
    pub fn asset(&self, idx: AssetIndex) -> &AssetEntry {
        &self.assets[idx.0]
    }

    pub fn asset_index(&self, id: &str) -> Option<AssetIndex> {
        self.assets.iter().position(|a| a.id == id).map(AssetIndex)
    }
}

/// Hex SHA-256 of the canonical form of `doc`.
pub fn doc_digest(doc: &ScenarioDoc) -> String {
    let hash = Sha256::digest(render(doc).as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn compile(doc: &ScenarioDoc) -> Result<RuntimeProgram, CompileError> {
    let diags = validate(doc);
    if has_errors(&diags) {
        return Err(CompileError::Invalid(diags));
    }

    let mut index: HashMap<&str, AssetIndex> = HashMap::new();
    let mut assets = Vec::with_capacity(doc.assets.len());
    for (i, a) in doc.assets.iter().enumerate() {
        index.insert(a.id.as_str(), AssetIndex(i));
        assets.push(AssetEntry {
            id: a.id.clone(),
            initial_pose: a.pose.to_pose().expect("validated pose"),
            tags: a.tags.clone(),
            narration: a
                .narration
                .iter()
                .flatten()
                .map(|l| (l.delay_s, l.text.clone()))
                .collect(),
            narrator: a.narrator.as_ref().map_or(a.id.clone(), |n| n.name.clone()),
            ik: a.ik,
            grab_mode: a.grab.unwrap_or_default(),
        });
    }
    let idx = |r: &AssetRef| index[r.name.as_str()];
    let region = |r: &RegionSpec| Region::new(Vec3::from(r.center), r.radius);

    let mut actions = Vec::with_capacity(doc.action_count());
    for lesson in &doc.lessons {
        for stage in &lesson.stages {
            for action in &stage.actions {
                let task = match &action.kind {
                    ActionKind::Insert {
                        interactable,
                        final_pose,
                        hologram,
                        aidline,
                    } => {
                        let target = final_pose.to_pose().expect("validated pose");
                        Task::Insert {
                            object: idx(interactable),
                            target,
                            hologram: hologram.clone(),
                            aidline: aidline.as_ref().map(|a| AidlinePayload {
                                text: a.text.clone(),
                                anchor: a.anchor.map(Vec3::from).unwrap_or(target.position),
                            }),
                        }
                    }
                    ActionKind::Remove {
                        target,
                        clearance_m,
                    } => Task::Remove {
                        object: idx(target),
                        clearance_m: *clearance_m,
                    },
                    ActionKind::Tool {
                        tool,
                        region: r,
                        required_active_s,
                    } => Task::Tool {
                        tool: idx(tool),
                        region: region(r),
                        required_active_s: *required_active_s,
                    },
                    ActionKind::Use {
                        implement,
                        region: r,
                        required_sweep_m,
                    } => Task::Use {
                        implement: idx(implement),
                        region: region(r),
                        required_sweep_m: *required_sweep_m,
                    },
                    ActionKind::Quiz {
                        question,
                        choices,
                        correct,
                        ..
                    } => Task::Quiz {
                        question: question.clone(),
                        choices: choices
                            .iter()
                            .map(|c| QuizChoice {
                                label: c.label.clone(),
                                icon: c.icon.as_ref().map(idx),
                            })
                            .collect(),
                        correct: *correct,
                    },
                };
                actions.push(ProgramAction {
                    path: format!("{}/{}/{}", lesson.id, stage.id, action.id),
                    task,
                });
            }
        }
    }

    Ok(RuntimeProgram {
        name: doc.name.clone(),
        digest: doc_digest(doc),
        assets,
        actions,
    })
}
