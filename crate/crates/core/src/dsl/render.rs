//! Canonical text form of a [`ScenarioDoc`]. Parsing the output yields a
//! document equal to the input.

use std::fmt::Write;

use super::ast::*;

fn num(v: f64) -> String {
    // Display for f64 prints the shortest string that parses back exactly.
    format!("{v}")
}

fn string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn pose(p: &PoseSpec) -> String {
    let parts: Vec<String> = p.to_array().iter().map(|v| num(*v)).collect();
    format!("pose({})", parts.join(", "))
}

fn vec3(v: &[f64; 3]) -> String {
    format!("[{}, {}, {}]", num(v[0]), num(v[1]), num(v[2]))
}

pub fn render(doc: &ScenarioDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} {{", string(&doc.name));
    for a in &doc.assets {
        let _ = writeln!(out, "  asset {} {{", a.id);
        let _ = writeln!(out, "    pose = {}", pose(&a.pose));
        if !a.tags.is_empty() {
            let tags: Vec<String> = a.tags.iter().map(|t| string(t.as_str())).collect();
            let _ = writeln!(out, "    tags = [{}]", tags.join(", "));
        }
        if let Some(lines) = &a.narration {
            let items: Vec<String> = lines
                .iter()
                .map(|l| format!("[{}, {}]", num(l.delay_s), string(&l.text)))
                .collect();
            let _ = writeln!(out, "    narration = [{}]", items.join(", "));
        }
        if let Some(n) = &a.narrator {
            let _ = writeln!(out, "    narrator = {}", string(&n.name));
        }
        if let Some((l1, l2)) = a.ik {
            let _ = writeln!(out, "    ik = [{}, {}]", num(l1), num(l2));
        }
        if let Some(g) = a.grab {
            let _ = writeln!(out, "    grab = {}", string(g.as_str()));
        }
        out.push_str("  }\n");
    }
    for l in &doc.lessons {
        let _ = writeln!(out, "  lesson {} {} {{", l.id, string(&l.title));
        for s in &l.stages {
            let _ = writeln!(out, "    stage {} {} {{", s.id, string(&s.title));
            for a in &s.actions {
                let _ = writeln!(out, "      action {} {} {{", a.id, a.kind.name());
                render_action(&mut out, &a.kind);
                out.push_str("      }\n");
            }
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn render_action(out: &mut String, kind: &ActionKind) {
    let ind = "        ";
    match kind {
        ActionKind::Insert {
            interactable,
            final_pose,
            hologram,
            aidline,
        } => {
            let _ = writeln!(out, "{ind}interactable = {}", string(&interactable.name));
            let _ = writeln!(out, "{ind}final = {}", pose(final_pose));
            let _ = writeln!(out, "{ind}hologram = {}", string(hologram));
            if let Some(aid) = aidline {
                let _ = writeln!(out, "{ind}aidline = {}", string(&aid.text));
                if let Some(anchor) = &aid.anchor {
                    let _ = writeln!(out, "{ind}aidline_anchor = {}", vec3(anchor));
                }
            }
        }
        ActionKind::Remove {
            target,
            clearance_m,
        } => {
            let _ = writeln!(out, "{ind}target = {}", string(&target.name));
            let _ = writeln!(out, "{ind}clearance = {}", num(*clearance_m));
        }
        ActionKind::Tool {
            tool,
            region,
            required_active_s,
        } => {
            let _ = writeln!(out, "{ind}tool = {}", string(&tool.name));
            let _ = writeln!(out, "{ind}center = {}", vec3(&region.center));
            let _ = writeln!(out, "{ind}radius = {}", num(region.radius));
            let _ = writeln!(out, "{ind}duration = {}", num(*required_active_s));
        }
        ActionKind::Use {
            implement,
            region,
            required_sweep_m,
        } => {
            let _ = writeln!(out, "{ind}implement = {}", string(&implement.name));
            let _ = writeln!(out, "{ind}center = {}", vec3(&region.center));
            let _ = writeln!(out, "{ind}radius = {}", num(region.radius));
            let _ = writeln!(out, "{ind}sweep = {}", num(*required_sweep_m));
        }
        ActionKind::Quiz {
            question,
            choices,
            correct,
            ..
        } => {
            let _ = writeln!(out, "{ind}question = {}", string(question));
            let items: Vec<String> = choices
                .iter()
                .map(|c| match &c.icon {
                    Some(icon) => format!("[{}, {}]", string(&c.label), string(&icon.name)),
                    None => string(&c.label),
                })
                .collect();
            let _ = writeln!(out, "{ind}choices = [{}]", items.join(", "));
            let _ = writeln!(out, "{ind}correct = {correct}");
        }
    }
}
