//! Parsed scenario tree. Mirrors the source text; values are kept in their
//! authored form (poses as axis-angle) so rendering reproduces them exactly.

use std::collections::BTreeSet;

use super::diag::Span;
use crate::math::{MathError, Pose, UnitQuat, Vec3};
use crate::scene::{GrabMode, Tag};

/// Source location attached to AST nodes. Locations never take part in
/// equality, so documents compare by content alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc(pub Span);

impl PartialEq for Loc {
    fn eq(&self, _: &Loc) -> bool {
        true
    }
}

/// A name that refers to a declared asset.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetRef {
    pub name: String,
    pub loc: Loc,
}

impl AssetRef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            loc: Loc::default(),
        }
    }
}

/// `pose(px, py, pz, axis_x, axis_y, axis_z, angle_deg)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSpec {
    pub position: [f64; 3],
    pub axis: [f64; 3],
    pub angle_deg: f64,
}

impl PoseSpec {
    pub fn at(position: [f64; 3]) -> Self {
        Self {
            position,
            axis: [0.0, 1.0, 0.0],
            angle_deg: 0.0,
        }
    }

    pub fn to_pose(&self) -> Result<Pose, MathError> {
        let rot = UnitQuat::from_axis_angle(Vec3::from(self.axis), self.angle_deg.to_radians())?;
        Ok(Pose::new(Vec3::from(self.position), rot))
    }

    pub fn to_array(&self) -> [f64; 7] {
        let [px, py, pz] = self.position;
        let [ax, ay, az] = self.axis;
        [px, py, pz, ax, ay, az, self.angle_deg]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            position: [a[0], a[1], a[2]],
            axis: [a[3], a[4], a[5]],
            angle_deg: a[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrationLine {
    pub delay_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetDef {
    pub id: String,
    pub loc: Loc,
    pub pose: PoseSpec,
    pub tags: BTreeSet<Tag>,
    pub narration: Option<Vec<NarrationLine>>,
    /// Asset that speaks the narration (defaults to the trigger itself).
    pub narrator: Option<AssetRef>,
    /// Link lengths `(L1, L2)` in meters.
    pub ik: Option<(f64, f64)>,
    pub grab: Option<GrabMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aidline {
    pub text: String,
    pub anchor: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub label: String,
    pub icon: Option<AssetRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    Insert {
        interactable: AssetRef,
        final_pose: PoseSpec,
        hologram: String,
        aidline: Option<Aidline>,
    },
    Remove {
        target: AssetRef,
        clearance_m: f64,
    },
    Tool {
        tool: AssetRef,
        region: RegionSpec,
        required_active_s: f64,
    },
    Use {
        implement: AssetRef,
        region: RegionSpec,
        required_sweep_m: f64,
    },
    Quiz {
        question: String,
        choices: Vec<Choice>,
        correct: usize,
        correct_loc: Loc,
    },
}

impl ActionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::Insert { .. } => "insert",
            ActionKind::Remove { .. } => "remove",
            ActionKind::Tool { .. } => "tool",
            ActionKind::Use { .. } => "use",
            ActionKind::Quiz { .. } => "quiz",
        }
    }

    /// Asset references made by this action, in a fixed order.
    pub fn asset_refs(&self) -> Vec<&AssetRef> {
        match self {
            ActionKind::Insert { interactable, .. } => vec![interactable],
            ActionKind::Remove { target, .. } => vec![target],
            ActionKind::Tool { tool, .. } => vec![tool],
            ActionKind::Use { implement, .. } => vec![implement],
            ActionKind::Quiz { choices, .. } => {
                choices.iter().filter_map(|c| c.icon.as_ref()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDef {
    pub id: String,
    pub loc: Loc,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageDef {
    pub id: String,
    pub title: String,
    pub loc: Loc,
    pub actions: Vec<ActionDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LessonDef {
    pub id: String,
    pub title: String,
    pub loc: Loc,
    pub stages: Vec<StageDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDoc {
    pub name: String,
    pub assets: Vec<AssetDef>,
    pub lessons: Vec<LessonDef>,
}

impl ScenarioDoc {
    pub fn action_count(&self) -> usize {
        self.lessons
            .iter()
            .flat_map(|l| &l.stages)
            .map(|s| s.actions.len())
            .sum()
    }

    pub fn asset(&self, id: &str) -> Option<&AssetDef> {
        self.assets.iter().find(|a| a.id == id)
    }
}
