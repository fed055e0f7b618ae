use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::diag::{Diagnostic, Span};
use crate::scene::Tag;

/// Semantic checks over a parsed document. Returns every error and warning,
/// ordered by source position.
pub fn validate(doc: &ScenarioDoc) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut assets: HashMap<&str, &AssetDef> = HashMap::new();

    for asset in &doc.assets {
        if assets.insert(asset.id.as_str(), asset).is_some() {
            diags.push(Diagnostic::error(
                asset.loc.0,
                format!("duplicate asset id '{}'", asset.id),
            ));
        }
        check_asset(asset, &mut diags);
    }
    for asset in &doc.assets {
        if let Some(n) = &asset.narrator {
            if !assets.contains_key(n.name.as_str()) {
                diags.push(Diagnostic::error(n.loc.0, format!("unknown asset '{}'", n.name)));
            }
            if asset.narration.is_none() {
                diags.push(Diagnostic::error(
                    n.loc.0,
                    format!("asset '{}' names a narrator but has no narration", asset.id),
                ));
            }
        }
    }

    let mut referenced: HashSet<&str> = HashSet::new();
    let mut lesson_ids = BTreeSet::new();
    for lesson in &doc.lessons {
        if !lesson_ids.insert(lesson.id.as_str()) {
            diags.push(Diagnostic::error(
                lesson.loc.0,
                format!("duplicate lesson id '{}'", lesson.id),
            ));
        }
        let mut stage_ids = BTreeSet::new();
        for stage in &lesson.stages {
            if !stage_ids.insert(stage.id.as_str()) {
                diags.push(Diagnostic::error(
                    stage.loc.0,
                    format!("duplicate stage id '{}' in lesson '{}'", stage.id, lesson.id),
                ));
            }
            let mut action_ids = BTreeSet::new();
            for action in &stage.actions {
                if !action_ids.insert(action.id.as_str()) {
                    diags.push(Diagnostic::error(
                        action.loc.0,
                        format!("duplicate action id '{}' in stage '{}'", action.id, stage.id),
                    ));
                }
                for r in action.kind.asset_refs() {
                    referenced.insert(r.name.as_str());
                }
                check_action(action, &assets, &mut diags);
            }
        }
    }

    if doc.action_count() == 0 {
        let span = doc
            .lessons
            .first()
            .map(|l| l.loc.0)
            .unwrap_or(Span::new(0, 1, 1, 0));
        diags.push(Diagnostic::error(span, "scenario defines no actions"));
    }

    for asset in &doc.assets {
        if !referenced.contains(asset.id.as_str()) {
            diags.push(Diagnostic::warning(
                asset.loc.0,
                format!("asset '{}' is never referenced by an action", asset.id),
            ));
        }
    }

    diags.sort_by_key(|d| (d.span.offset, d.severity));
    diags
}

fn check_pose(pose: &PoseSpec, span: Span, what: &str, diags: &mut Vec<Diagnostic>) {
    let finite = pose.to_array().iter().all(|v| v.is_finite());
    if !finite {
        diags.push(Diagnostic::error(span, format!("{what} has non-finite components")));
    } else if pose.to_pose().is_err() {
        diags.push(Diagnostic::error(
            span,
            format!("{what} has a zero rotation axis with a non-zero angle"),
        ));
    }
}

fn check_asset(asset: &AssetDef, diags: &mut Vec<Diagnostic>) {
    let span = asset.loc.0;
    check_pose(&asset.pose, span, &format!("pose of asset '{}'", asset.id), diags);
    if asset.narration.is_some() && !asset.tags.contains(&Tag::StorytellerTrigger) {
        diags.push(Diagnostic::error(
            span,
            format!(
                "asset '{}' has narration but lacks the 'storyteller_trigger' tag",
                asset.id
            ),
        ));
    }
    if let Some(lines) = &asset.narration {
        if lines.iter().any(|l| !(l.delay_s >= 0.0 && l.delay_s.is_finite())) {
            diags.push(Diagnostic::error(
                span,
                format!("asset '{}' has a negative narration delay", asset.id),
            ));
        }
    }
    if let Some((l1, l2)) = asset.ik {
        if !asset.tags.contains(&Tag::IkChain) {
            diags.push(Diagnostic::error(
                span,
                format!("asset '{}' has ik links but lacks the 'ik_chain' tag", asset.id),
            ));
        }
        if !(l1 > 0.0 && l2 > 0.0) {
            diags.push(Diagnostic::error(
                span,
                format!("ik link lengths of asset '{}' must be positive", asset.id),
            ));
        }
    }
}

fn resolve<'a>(
    r: &AssetRef,
    assets: &HashMap<&str, &'a AssetDef>,
    diags: &mut Vec<Diagnostic>,
) -> Option<&'a AssetDef> {
    let found = assets.get(r.name.as_str()).copied();
    if found.is_none() {
        diags.push(Diagnostic::error(r.loc.0, format!("unknown asset '{}'", r.name)));
    }
    found
}

fn require_tag(asset: &AssetDef, tag: Tag, r: &AssetRef, diags: &mut Vec<Diagnostic>) {
    if !asset.tags.contains(&tag) {
        diags.push(Diagnostic::error(
            r.loc.0,
            format!("asset '{}' is not tagged '{}'", asset.id, tag),
        ));
    }
}

fn positive(value: f64, what: &str, span: Span, diags: &mut Vec<Diagnostic>) {
    if !(value > 0.0 && value.is_finite()) {
        diags.push(Diagnostic::error(span, format!("{what} must be positive")));
    }
}

fn check_action(
    action: &ActionDef,
    assets: &HashMap<&str, &AssetDef>,
    diags: &mut Vec<Diagnostic>,
) {
    let span = action.loc.0;
    match &action.kind {
        ActionKind::Insert {
            interactable,
            final_pose,
            ..
        } => {
            if let Some(a) = resolve(interactable, assets, diags) {
                require_tag(a, Tag::Interactable, interactable, diags);
            }
            check_pose(final_pose, span, &format!("final pose of action '{}'", action.id), diags);
        }
        ActionKind::Remove {
            target,
            clearance_m,
        } => {
            if let Some(a) = resolve(target, assets, diags) {
                require_tag(a, Tag::Interactable, target, diags);
            }
            positive(*clearance_m, "clearance", span, diags);
        }
        ActionKind::Tool {
            tool,
            region,
            required_active_s,
        } => {
            if let Some(a) = resolve(tool, assets, diags) {
                require_tag(a, Tag::Tool, tool, diags);
                require_tag(a, Tag::Interactable, tool, diags);
            }
            positive(region.radius, "radius", span, diags);
            positive(*required_active_s, "duration", span, diags);
        }
        ActionKind::Use {
            implement,
            region,
            required_sweep_m,
        } => {
            if let Some(a) = resolve(implement, assets, diags) {
                require_tag(a, Tag::Interactable, implement, diags);
            }
            positive(region.radius, "radius", span, diags);
            positive(*required_sweep_m, "sweep", span, diags);
        }
        ActionKind::Quiz {
            choices,
            correct,
            correct_loc,
            ..
        } => {
            if choices.is_empty() {
                diags.push(Diagnostic::error(span, "quiz has no choices"));
            } else if *correct >= choices.len() {
                diags.push(Diagnostic::error(
                    correct_loc.0,
                    format!(
                        "correct index {correct} out of range for {} choices",
                        choices.len()
                    ),
                ));
            }
            for icon in choices.iter().filter_map(|c| c.icon.as_ref()) {
                resolve(icon, assets, diags);
            }
        }
    }
}
